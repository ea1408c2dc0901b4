# exterior.py
# One-forms, two-forms and matrices of two-forms over a fixed frame e1..en
#
# Two-forms live in coordinates over the lexicographic wedge basis
# e_i^e_j (i < j). A matrix of two-forms is stored as one real m x m
# coefficient matrix per wedge-basis element, so entry (i, j) of the
# represented matrix is sum_k terms[k][i, j] * w_k.

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import linalg

import settings
from errors import DimensionMismatchError, SingularMatrixError


@lru_cache(maxsize=None)
def wedge_pairs(n):
    """Lexicographic (i, j), i < j, index pairs of the wedge basis"""
    return tuple(combinations(range(n), 2))


def _frozen_array(values, ndim=None):
    array = np.array(values, dtype=float)
    if ndim is not None and array.ndim != ndim:
        raise DimensionMismatchError(f"expected a {ndim}-dimensional array, got shape {array.shape}")
    array.setflags(write=False)
    return array


def format_label(i, j):
    """0-based pair -> 'e1^e2' style label"""
    return f"e{i + 1}^e{j + 1}"


@dataclass(frozen=True)
class FormBasis:
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"form dimension must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def pairs(self):
        return wedge_pairs(self.n)

    @property
    def size(self):
        return self.n * (self.n - 1) // 2

    @property
    def labels(self):
        return [format_label(i, j) for i, j in self.pairs]

    def slot(self, i, j):
        """Return (slot, sign) such that e_i^e_j = sign * w_slot"""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"wedge index ({i}, {j}) out of range for n={self.n}")
        if i == j:
            raise ValueError(f"e{i + 1}^e{i + 1} vanishes and is not a basis element")
        sign = 1.0
        if i > j:
            i, j = j, i
            sign = -1.0
        return i * self.n - i * (i + 1) // 2 + (j - i - 1), sign


@dataclass(frozen=True, eq=False)
class TwoForm:
    basis: FormBasis
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = _frozen_array(self.coeffs, ndim=1)
        if coeffs.shape != (self.basis.size,):
            raise DimensionMismatchError(
                f"two-form over n={self.basis.n} needs {self.basis.size} coefficients, got {coeffs.shape[0]}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, basis):
        return cls(basis, np.zeros(basis.size))

    @classmethod
    def from_terms(cls, basis, terms):
        """Build from {(i, j): coefficient}; reversed pairs contribute with a flipped sign"""
        coeffs = np.zeros(basis.size)
        for (i, j), value in terms.items():
            slot, sign = basis.slot(i, j)
            coeffs[slot] += sign * value
        return cls(basis, coeffs)

    def coefficient(self, i, j):
        slot, sign = self.basis.slot(i, j)
        return sign * self.coeffs[slot]

    def is_zero(self, tol=0.0):
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def _check_same_basis(self, other):
        if not isinstance(other, TwoForm):
            return NotImplemented
        if other.basis != self.basis:
            raise DimensionMismatchError(f"two-forms over n={self.basis.n} and n={other.basis.n}")
        return other

    def __add__(self, other):
        if self._check_same_basis(other) is NotImplemented:
            return NotImplemented
        return TwoForm(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check_same_basis(other) is NotImplemented:
            return NotImplemented
        return TwoForm(self.basis, self.coeffs - other.coeffs)

    def __neg__(self):
        return TwoForm(self.basis, -self.coeffs)

    def __mul__(self, scalar):
        return TwoForm(self.basis, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self):
        parts = [f"{c:+g} {label}" for c, label in zip(self.coeffs, self.basis.labels) if c != 0]
        return f"TwoForm({' '.join(parts) if parts else '0'})"


@dataclass(frozen=True, eq=False)
class OneForm:
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = _frozen_array(self.coeffs, ndim=1)
        if coeffs.shape[0] < 1:
            raise DimensionMismatchError("one-form needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self):
        return self.coeffs.shape[0]

    def __add__(self, other):
        if not isinstance(other, OneForm):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatchError(f"one-forms over n={self.n} and n={other.n}")
        return OneForm(self.coeffs + other.coeffs)

    def __neg__(self):
        return OneForm(-self.coeffs)

    def __mul__(self, scalar):
        return OneForm(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self):
        parts = [f"{c:+g} e{k + 1}" for k, c in enumerate(self.coeffs) if c != 0]
        return f"OneForm({' '.join(parts) if parts else '0'})"


def wedge(u, v, basis=None):
    """u ^ v for vectors (or OneForms) u, v of length n"""
    u = u.coeffs if isinstance(u, OneForm) else np.asarray(u, dtype=float)
    v = v.coeffs if isinstance(v, OneForm) else np.asarray(v, dtype=float)
    if u.ndim != 1 or u.shape != v.shape:
        raise DimensionMismatchError(f"cannot wedge vectors of shapes {u.shape} and {v.shape}")
    if basis is None:
        basis = FormBasis(u.shape[0])
    elif basis.n != u.shape[0]:
        raise DimensionMismatchError(f"vectors of length {u.shape[0]} for a basis of dimension {basis.n}")

    outer = np.outer(u, v)
    upper = np.triu_indices(basis.n, k=1)
    return TwoForm(basis, (outer - outer.T)[upper])


@dataclass(frozen=True, eq=False)
class FormMatrix:
    basis: FormBasis
    terms: np.ndarray

    def __post_init__(self):
        terms = _frozen_array(self.terms, ndim=3)
        if terms.shape[0] != self.basis.size:
            raise DimensionMismatchError(
                f"expected {self.basis.size} term matrices for n={self.basis.n}, got {terms.shape[0]}"
            )
        if terms.shape[1] != terms.shape[2] or terms.shape[1] < 1:
            raise DimensionMismatchError(f"term matrices must be square and non-empty, got {terms.shape[1:]}")
        object.__setattr__(self, "terms", terms)

    @property
    def m(self):
        return self.terms.shape[1]

    @classmethod
    def zeros(cls, basis, m):
        return cls(basis, np.zeros((basis.size, m, m)))

    @classmethod
    def from_terms(cls, basis, m, terms):
        """Build from (pair, matrix) items; e_j^e_i with j > i negates the matrix"""
        stack = np.zeros((basis.size, m, m))
        seen = set()
        for (i, j), matrix in terms:
            slot, sign = basis.slot(i, j)
            if slot in seen:
                raise ValueError(f"wedge pair {format_label(*basis.pairs[slot])} given twice")
            seen.add(slot)
            matrix = np.asarray(matrix, dtype=float)
            if matrix.shape != (m, m):
                raise DimensionMismatchError(f"term {format_label(i, j)} is {matrix.shape}, expected ({m}, {m})")
            stack[slot] = sign * matrix
        return cls(basis, stack)

    def entry(self, i, j):
        if not (0 <= i < self.m and 0 <= j < self.m):
            raise IndexError(f"entry ({i}, {j}) out of range for a {self.m}x{self.m} form matrix")
        return TwoForm(self.basis, self.terms[:, i, j])

    def is_skew(self, tol=0.0):
        return bool(np.all(np.abs(self.terms + self.terms.transpose(0, 2, 1)) <= tol))

    def allclose(self, other, atol=1e-10):
        return self.basis == other.basis and self.terms.shape == other.terms.shape and bool(
            np.allclose(self.terms, other.terms, rtol=0.0, atol=atol)
        )


def form_matrix_entry(form_matrix, i, j):
    return form_matrix.entry(i, j)


def require_invertible(matrix, rtol=settings.COND_RTOL):
    """Return `matrix` as an array, rejecting singular or near-singular input"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {matrix.shape}")
    s = linalg.svdvals(matrix)
    if s[0] == 0.0 or s[-1] < rtol * s[0]:
        ratio = s[-1] / s[0] if s[0] else 0.0
        raise SingularMatrixError(f"matrix is singular to working precision (sigma_min/sigma_max = {ratio:.3e})")
    return matrix


def conjugate_stack(stack, U):
    """U^-1 X U for every X in a (k, m, m) stack; U must already be checked"""
    stack = np.asarray(stack, dtype=float)
    if stack.shape[0] == 0:
        return stack.copy()
    lu = linalg.lu_factor(U)
    return np.stack([linalg.lu_solve(lu, X @ U) for X in stack])


def conjugate_form_matrix(form_matrix, U):
    """Frame change Omega' = U^-1 Omega U, applied term by term"""
    U = require_invertible(U)
    if U.shape[0] != form_matrix.m:
        raise DimensionMismatchError(f"{U.shape[0]}x{U.shape[0]} frame change for a {form_matrix.m}x{form_matrix.m} form matrix")
    return FormMatrix(form_matrix.basis, conjugate_stack(form_matrix.terms, U))
