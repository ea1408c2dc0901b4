import numpy as np
import pytest

from decompose import CoefficientSet, coefficient_set_for, compose, decompose, rank
from errors import DimensionMismatchError
from exterior import FormBasis, FormMatrix, conjugate_stack
from testing_utils import (
    WORKED_LABELS,
    WORKED_S,
    exact_rank,
    random_conjugator,
    random_integer_matrices,
    random_skew,
)


def test_worked_example_coefficients(worked_form):
    C = decompose(worked_form)
    assert C.labels == ((0, 1), (0, 2), (1, 2))
    for got, printed in zip(C.in_labels(WORKED_LABELS), WORKED_S):
        np.testing.assert_array_equal(got, printed)


def test_reversed_label_is_stored_negated(worked_form):
    # e3^e1 = -e1^e3
    np.testing.assert_array_equal(decompose(worked_form).matrices[1], -WORKED_S[2])


def test_decompose_keeps_zero_terms():
    C = decompose(FormMatrix.zeros(FormBasis(3), 2))
    assert len(C) == 3
    assert not np.any(C.matrices)
    assert len(C.nonzero()) == 0


def test_compose_inverts_decompose(rng):
    basis = FormBasis(4)
    F = FormMatrix(basis, rng.standard_normal((basis.size, 3, 3)))
    assert compose(decompose(F), basis).allclose(F, atol=0.0)


def test_in_labels_unknown_pair():
    C = CoefficientSet.from_matrices([np.eye(2)])
    with pytest.raises(KeyError):
        C.in_labels([(0, 2)])


def test_from_matrices_labels_and_shapes():
    C = CoefficientSet.from_matrices([np.eye(2)] * 4)
    assert C.labels == ((0, 1), (0, 2), (0, 3), (1, 2))
    with pytest.raises(DimensionMismatchError):
        CoefficientSet.from_matrices([np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        CoefficientSet.from_matrices([])


def test_labels_must_be_distinct():
    with pytest.raises(ValueError):
        CoefficientSet(2, [(0, 1), (1, 0)], np.zeros((2, 2, 2)))


def test_nonzero_drops_vanishing_terms():
    C = CoefficientSet(2, [(0, 1), (0, 2), (1, 2)], [np.zeros((2, 2)), np.eye(2), np.zeros((2, 2))])
    kept = C.nonzero()
    assert kept.labels == ((0, 2),)
    np.testing.assert_array_equal(kept.matrices[0], np.eye(2))


def test_coefficient_set_for_accepts_all_inputs(worked_form, worked_set):
    assert coefficient_set_for(worked_set) is worked_set
    assert len(coefficient_set_for(worked_form)) == 3
    assert coefficient_set_for(WORKED_S).m == 3


def test_rank_of_worked_example(worked_set):
    report = rank(worked_set)
    assert report.rank == 3
    assert report.full_rank
    assert report.skew_space_dim == 3


def test_rank_of_dependent_pair():
    S = np.array([[1.0, 2.0], [3.0, 4.0]])
    report = rank(CoefficientSet.from_matrices([S, 2 * S]))
    assert report.rank == 1
    assert report.full_rank


def test_rank_of_empty_set():
    report = rank(CoefficientSet(2, (), np.zeros((0, 2, 2))))
    assert report.rank == 0
    assert not report.full_rank
    assert report.threshold_used == 0.0


def test_rank_of_all_zero_set():
    assert rank(CoefficientSet.from_matrices([np.zeros((3, 3))] * 2)).rank == 0


def test_rank_below_full(rng):
    Ts = [random_skew(rng, 4) for _ in range(2)]
    report = rank(CoefficientSet.from_matrices(Ts))
    assert report.rank == 2
    assert report.skew_space_dim == 6
    assert not report.full_rank


def test_rank_rejects_bad_tolerance(worked_set):
    with pytest.raises(ValueError):
        rank(worked_set, tol=0.0)


def test_rank_invariant_under_conjugation(rng):
    for _ in range(30):
        m = int(rng.integers(2, 5))
        matrices = random_integer_matrices(rng, m, int(rng.integers(1, 5)))
        U = random_conjugator(rng, m)
        before = rank(CoefficientSet.from_matrices(matrices)).rank
        after = rank(CoefficientSet.from_matrices(conjugate_stack(np.array(matrices), U))).rank
        assert before == after


def test_rank_agrees_with_exact_arithmetic(rng):
    for _ in range(60):
        m = int(rng.integers(2, 5))
        k = int(rng.integers(1, 7))
        matrices = random_integer_matrices(rng, m, k, low=-1, high=1)
        # repeat a combination now and then so deficient ranks show up
        if k > 2 and rng.random() < 0.5:
            matrices[-1] = matrices[0] - matrices[1]
        assert rank(CoefficientSet.from_matrices(matrices)).rank == exact_rank(matrices)
