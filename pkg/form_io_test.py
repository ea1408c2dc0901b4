import json

import numpy as np
import pytest

from decompose import CoefficientSet, decompose
from errors import FormatError
from exterior import FormBasis, FormMatrix
from form_io import (
    check_table,
    matrix_table,
    parse_certificate,
    parse_connection,
    parse_form_matrix,
    parse_form_matrix_file,
    parse_label,
    parse_matrix,
    serialize_certificate,
    serialize_connection,
    serialize_form_matrix,
    verify_certificate,
)
from pipeline import ConnectionMatrix
from solver import SkewCertificate, SolverOptions, Status, skew_symmetrize
from testing_utils import WORKED_LABELS, WORKED_S, random_skewable_set


def form_doc(**overrides):
    doc = {
        "form_dim": 3,
        "size": 2,
        "terms": [{"label": "e1^e2", "matrix": [[0, 1], [-1, 0]]}],
    }
    doc.update(overrides)
    return json.dumps(doc)


def test_parse_worked_example(worked_file):
    assert worked_file.basis_labels == tuple(WORKED_LABELS)
    assert worked_file.form_matrix.m == 3
    assert worked_file.form_matrix.basis.n == 3
    for got, printed in zip(decompose(worked_file.form_matrix).in_labels(WORKED_LABELS), WORKED_S):
        np.testing.assert_array_equal(got, printed)


def test_parse_label_forms():
    assert parse_label("e3^e1", 3) == (2, 0)
    assert parse_label(" e1 ∧ e2 ", 2) == (0, 1)


@pytest.mark.parametrize("label", ["e1e2", "e0^e1", "e1^e4", "e2^e2", 12])
def test_parse_label_rejects(label):
    with pytest.raises(FormatError):
        parse_label(label, 3)


def test_missing_terms_give_zero_matrix():
    F = parse_form_matrix(json.dumps({"form_dim": 2, "size": 3}))
    assert not np.any(F.terms)


def test_reversed_label_negates():
    F = parse_form_matrix(form_doc(terms=[{"label": "e2^e1", "matrix": [[1, 0], [0, 1]]}]))
    np.testing.assert_array_equal(F.terms[0], -np.eye(2))


def test_invalid_json_reports_line():
    with pytest.raises(FormatError) as info:
        parse_form_matrix('{\n  "form_dim": 3,\n  oops\n}')
    assert info.value.line == 3
    assert "line 3" in str(info.value)


@pytest.mark.parametrize("overrides, field", [
    ({"form_dim": 0}, "form_dim"),
    ({"size": "2"}, "size"),
    ({"form_dim": True}, "form_dim"),
    ({"terms": {"label": "e1^e2"}}, "terms"),
    ({"terms": [{"label": "e1^e2"}]}, "terms[0]"),
    ({"terms": [{"label": "e1^e5", "matrix": [[0, 1], [-1, 0]]}]}, "terms[0].label"),
    ({"terms": [{"label": "e1^e2", "matrix": [[0, 1, 0], [-1, 0, 0]]}]}, "terms[0].matrix"),
    ({"terms": [{"label": "e1^e2", "matrix": [[0, "x"], [-1, 0]]}]}, "terms[0].matrix"),
    ({"terms": [
        {"label": "e1^e2", "matrix": [[0, 1], [-1, 0]]},
        {"label": "e2^e1", "matrix": [[0, 1], [-1, 0]]},
    ]}, "terms[1].label"),
    ({"basis_labels": ["e1^e2", "e2^e1"]}, "basis_labels[1]"),
    ({"basis_labels": ["e2^e3"]}, "terms[0].label"),
    ({"basis_labels": "e1^e2"}, "basis_labels"),
])
def test_format_errors_name_the_field(overrides, field):
    with pytest.raises(FormatError) as info:
        parse_form_matrix(form_doc(**overrides))
    assert info.value.field == field


def test_non_finite_entries_rejected():
    text = form_doc().replace("[[0, 1], [-1, 0]]", "[[0, NaN], [-1, 0]]")
    with pytest.raises(FormatError):
        parse_form_matrix(text)


def test_top_level_must_be_object():
    with pytest.raises(FormatError):
        parse_form_matrix("[1, 2]")


def test_form_matrix_survives_serialization_exactly(rng):
    basis = FormBasis(4)
    F = FormMatrix(basis, rng.standard_normal((basis.size, 3, 3)) * 10.0 ** rng.uniform(-8, 8, (basis.size, 1, 1)))
    again = parse_form_matrix(serialize_form_matrix(F))
    np.testing.assert_array_equal(again.terms, F.terms)


def test_serialize_in_declared_labels(worked_file):
    text = serialize_form_matrix(worked_file.form_matrix, worked_file.basis_labels)
    doc = json.loads(text)
    assert doc["basis_labels"] == ["e1^e2", "e2^e3", "e3^e1"]
    assert doc["terms"][2]["matrix"] == WORKED_S[2].tolist()
    again = parse_form_matrix_file(text)
    assert again.basis_labels == worked_file.basis_labels
    np.testing.assert_array_equal(again.form_matrix.terms, worked_file.form_matrix.terms)


def test_connection_roundtrip(rng):
    connection = ConnectionMatrix(rng.standard_normal((3, 2, 2)))
    np.testing.assert_array_equal(parse_connection(serialize_connection(connection)).terms, connection.terms)


def test_connection_missing_terms_are_zero():
    text = json.dumps({"form_dim": 2, "size": 2, "terms": [{"label": "e2", "matrix": [[1, 0], [0, 1]]}]})
    connection = parse_connection(text)
    assert not np.any(connection.terms[0])
    np.testing.assert_array_equal(connection.terms[1], np.eye(2))


@pytest.mark.parametrize("terms, field", [
    ([{"label": "e3", "matrix": [[1, 0], [0, 1]]}], "terms[0].label"),
    ([{"label": "e1^e2", "matrix": [[1, 0], [0, 1]]}], "terms[0].label"),
    ([{"label": "e1", "matrix": [[1, 0], [0, 1]]}, {"label": "e1", "matrix": [[1, 0], [0, 1]]}], "terms[1].label"),
    ([{"label": "e1", "matrix": [[1]]}], "terms[0].matrix"),
    (5, "terms"),
    ({"e1": [[1, 0], [0, 1]]}, "terms"),
])
def test_connection_errors(terms, field):
    with pytest.raises(FormatError) as info:
        parse_connection(json.dumps({"form_dim": 2, "size": 2, "terms": terms}))
    assert info.value.field == field


def test_parse_matrix_forms():
    np.testing.assert_array_equal(parse_matrix("[[1, 2], [3, 4]]"), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(parse_matrix('{"matrix": [[5]]}'), [[5]])
    with pytest.raises(FormatError):
        parse_matrix('{"rows": [[1]]}')
    with pytest.raises(FormatError):
        parse_matrix("[[1, 2]]")


def test_certificate_survives_serialization(worked_set):
    cert = skew_symmetrize(worked_set, SolverOptions(rng_seed=11, restarts=4))
    again = parse_certificate(serialize_certificate(cert))
    assert again.status is Status.SKEWABLE
    np.testing.assert_array_equal(again.A, cert.A)
    np.testing.assert_array_equal(again.U, cert.U)
    assert again.lambda_min_A == cert.lambda_min_A
    assert again.skew_residuals == cert.skew_residuals
    assert again.options == cert.options


def test_not_skewable_certificate_has_no_matrices(fixture_path):
    F = parse_form_matrix(fixture_path("trace_obstruction.form").read_text(encoding="utf-8"))
    doc = json.loads(serialize_certificate(skew_symmetrize(F)))
    assert doc["status"] == "NotSkewable"
    assert doc["A"] is None and doc["U"] is None
    assert "trace" in doc["reason"]


@pytest.mark.parametrize("change, field", [
    ({"kind": "form-matrix"}, "kind"),
    ({"status": "Maybe"}, "status"),
    ({"tolerances": {"eps_pd": -1.0}}, "tolerances"),
    ({"skew_residuals": ["x"]}, "skew_residuals"),
    ({"skew_residuals": 5}, "skew_residuals"),
    ({"tolerances": [1]}, "tolerances"),
    ({"tolerances": "tight"}, "tolerances"),
    ({"lambda_min_A": "small"}, "lambda_min_A"),
    ({"null_space_dim": "one"}, "null_space_dim"),
    ({"null_space_dim": -1}, "null_space_dim"),
    ({"reason": 7}, "reason"),
])
def test_certificate_format_errors(worked_set, change, field):
    doc = json.loads(serialize_certificate(skew_symmetrize(worked_set)))
    doc.update(change)
    with pytest.raises(FormatError) as info:
        parse_certificate(json.dumps(doc))
    assert info.value.field == field


def test_verify_accepts_fresh_certificates(rng, worked_set, fixture_path):
    assert verify_certificate(skew_symmetrize(worked_set), worked_set).ok
    obstruction = parse_form_matrix(fixture_path("trace_obstruction.form").read_text(encoding="utf-8"))
    assert verify_certificate(skew_symmetrize(obstruction), obstruction).ok
    for _ in range(20):
        m = int(rng.integers(2, 5))
        matrices, _, _ = random_skewable_set(rng, m, int(rng.integers(2, 4)))
        coefficients = CoefficientSet.from_matrices(matrices)
        cert = parse_certificate(serialize_certificate(skew_symmetrize(coefficients)))
        report = verify_certificate(cert, coefficients)
        assert report.ok, [c.name for c in report.failures]


def test_verify_rejects_perturbed_frame_change(worked_set):
    cert = skew_symmetrize(worked_set)
    for i in range(3):
        for j in range(3):
            U = cert.U.copy()
            U[i, j] += 1e-2
            tampered = SkewCertificate(cert.status, A=cert.A, U=U, lambda_min_A=cert.lambda_min_A,
                                       skew_residuals=cert.skew_residuals, null_space_dim=cert.null_space_dim,
                                       options=cert.options)
            assert not verify_certificate(tampered, worked_set).ok


def test_verify_rejects_wrong_status(worked_set):
    false_claim = SkewCertificate(Status.NOT_SKEWABLE, reason="made up")
    report = verify_certificate(false_claim, worked_set)
    assert not report.ok
    assert len(report.failures) == 1


def test_verify_rejects_wrong_size(worked_set):
    cert = skew_symmetrize([np.array([[0.0, 1.0], [-1.0, 0.0]])])
    assert not verify_certificate(cert, worked_set).ok


def test_tables(worked_set):
    cert = skew_symmetrize(worked_set)
    table = matrix_table(cert.A)
    assert len(table.splitlines()) == 4
    assert "1.5" in table
    rendered = check_table(verify_certificate(cert, worked_set))
    assert "skew residual e1^e2" in rendered
    assert "FAIL" not in rendered


def test_verify_ignores_tolerances_stored_in_the_certificate(fixture_path):
    obstruction = parse_form_matrix(fixture_path("trace_obstruction.form").read_text(encoding="utf-8"))
    forged = SkewCertificate(Status.SKEWABLE, A=np.eye(2), U=np.eye(2), lambda_min_A=1.0, skew_residuals=(2.0,),
                             null_space_dim=1, options=SolverOptions(skew_tol=10.0, eps_pd=1e-3))
    again = parse_certificate(serialize_certificate(forged))
    assert again.options.skew_tol == 10.0
    report = verify_certificate(again, obstruction)
    assert not report.ok
    assert any(check.name.startswith("skew residual") for check in report.failures)
    # the same loose tolerance is honoured only when the checker asks for it
    assert all(check.limit < 1.0 for check in report.checks if check.name.startswith("skew residual"))


def test_verify_checks_trace_normalization():
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    unnormalized = SkewCertificate(Status.SKEWABLE, A=2.0 * np.eye(2), U=np.sqrt(2.0) * np.eye(2), lambda_min_A=2.0,
                                   skew_residuals=(0.0,), null_space_dim=1)
    report = verify_certificate(unnormalized, [J])
    assert [check.name for check in report.failures] == ["|trace(A) - m|"]


def test_verify_uses_the_given_tolerances(worked_set):
    cert = skew_symmetrize(worked_set)
    strict = verify_certificate(cert, worked_set, SolverOptions(skew_tol=1e-30))
    assert not strict.ok
    assert verify_certificate(cert, worked_set, SolverOptions()).ok
