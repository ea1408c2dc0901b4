# decompose.py
# Reduce a matrix of two-forms to its real coefficient matrices and measure its rank

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

import settings
from errors import DimensionMismatchError
from exterior import FormMatrix, format_label, wedge_pairs

log = logging.getLogger(__name__)


def _labels_for(count):
    """First `count` wedge pairs of the smallest frame that has that many"""
    n = 1
    while n * (n - 1) // 2 < count:
        n += 1
    return wedge_pairs(n)[:count]


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Ordered real m x m matrices S_k with the wedge pair each one multiplies"""

    m: int
    labels: tuple
    matrices: np.ndarray

    def __post_init__(self):
        matrices = np.array(self.matrices, dtype=float).reshape(-1, self.m, self.m)
        labels = tuple((int(i), int(j)) for i, j in self.labels)
        if len(labels) != matrices.shape[0]:
            raise DimensionMismatchError(f"{len(labels)} labels for {matrices.shape[0]} matrices")
        if len({frozenset(pair) for pair in labels}) != len(labels):
            raise ValueError("coefficient labels must be distinct wedge pairs")
        matrices.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrices", matrices)

    @classmethod
    def from_matrices(cls, matrices):
        """Wrap a plain list of real matrices, labelling them with the first wedge pairs"""
        matrices = [np.asarray(S, dtype=float) for S in matrices]
        if not matrices:
            raise ValueError("from_matrices needs at least one matrix to fix the size; use CoefficientSet(m, (), []) instead")
        m = matrices[0].shape[0]
        for S in matrices:
            if S.shape != (m, m):
                raise DimensionMismatchError(f"matrix of shape {S.shape} in a set of {m}x{m} matrices")
        return cls(m, _labels_for(len(matrices)), np.stack(matrices))

    def __len__(self):
        return len(self.labels)

    def nonzero(self, tol=0.0):
        keep = [k for k, S in enumerate(self.matrices) if np.max(np.abs(S), initial=0.0) > tol]
        return CoefficientSet(self.m, [self.labels[k] for k in keep], self.matrices[np.asarray(keep, dtype=int)])

    def in_labels(self, pairs):
        """Coefficient matrices re-expressed against oriented labels such as (2, 0) for e3^e1"""
        lookup = {pair: k for k, pair in enumerate(self.labels)}
        out = []
        for i, j in pairs:
            if (i, j) in lookup:
                out.append(self.matrices[lookup[(i, j)]].copy())
            elif (j, i) in lookup:
                out.append(-self.matrices[lookup[(j, i)]])
            else:
                raise KeyError(f"no coefficient for {format_label(i, j)}")
        return out


@dataclass(frozen=True)
class RankReport:
    rank: int
    full_rank: bool
    threshold_used: float
    m: int
    skew_space_dim: int


def decompose(form_matrix):
    """Omega = sum_k w_k S_k  ->  the S_k with their wedge labels (zero terms kept)"""
    return CoefficientSet(form_matrix.m, form_matrix.basis.pairs, form_matrix.terms.copy())


def compose(coefficients, basis):
    """Inverse of decompose: place each S_k on its wedge slot of `basis`"""
    return FormMatrix.from_terms(basis, coefficients.m, zip(coefficients.labels, coefficients.matrices))


def rank(coefficients, tol=settings.RANK_TOL):
    """Number of linearly independent coefficient matrices (numerical rank of their vectorization)"""
    if tol <= 0:
        raise ValueError("rank tolerance must be positive")
    m = coefficients.m
    skew_dim = m * (m - 1) // 2
    stacked = coefficients.matrices.reshape(len(coefficients), m * m)

    if stacked.shape[0] == 0 or not np.any(stacked):
        r, threshold = 0, 0.0
    else:
        s = linalg.svdvals(stacked)
        threshold = tol * s[0]
        r = int(np.sum(s >= threshold))

    log.debug("rank %d of %d coefficient matrices (skew space dim %d)", r, len(coefficients), skew_dim)
    return RankReport(rank=r, full_rank=r == skew_dim, threshold_used=float(threshold), m=m, skew_space_dim=skew_dim)


def coefficient_set_for(form_matrix_or_matrices):
    """Accept a FormMatrix, a CoefficientSet or a list of matrices"""
    if isinstance(form_matrix_or_matrices, CoefficientSet):
        return form_matrix_or_matrices
    if isinstance(form_matrix_or_matrices, FormMatrix):
        return decompose(form_matrix_or_matrices)
    return CoefficientSet.from_matrices(form_matrix_or_matrices)
