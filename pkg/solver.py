# solver.py
# Decide simultaneous skewability of real matrices S_1..S_k
#
# A set is simultaneously skewable exactly when S_i A + A S_i^T = 0 has a
# symmetric positive-definite solution A; the symmetric square root U of
# such an A makes every U^-1 S_i U skew-symmetric.

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import linalg

import settings
from decompose import coefficient_set_for
from errors import ConfigurationError, NotPositiveDefiniteError, NotSymmetricError, VacuousProblemError
from exterior import conjugate_stack

log = logging.getLogger(__name__)


class Status(str, Enum):
    SKEWABLE = "Skewable"
    NOT_SKEWABLE = "NotSkewable"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SolverOptions:
    null_tol: float = settings.NULL_TOL
    eps_pd: float = settings.EPS_PD
    skew_tol: float = settings.SKEW_TOL
    reject_tol: float = settings.REJECT_TOL
    restarts: int = settings.RESTARTS
    iterations: int = settings.ITERATIONS
    rng_seed: int = field(default_factory=settings.default_seed)
    quick_reject: bool = True

    def __post_init__(self):
        for name in ("null_tol", "eps_pd", "skew_tol", "reject_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.restarts < 1:
            raise ConfigurationError(f"restarts must be at least 1, got {self.restarts}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be at least 1, got {self.iterations}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class NullSpaceBasis:
    """Frobenius-orthonormal symmetric solutions of S_i X + X S_i^T = 0"""

    basis: np.ndarray
    residual: float
    singular_values: np.ndarray

    @property
    def dimension(self):
        return self.basis.shape[0]

    @property
    def m(self):
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class SkewCertificate:
    status: Status
    A: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None
    lambda_min_A: Optional[float] = None
    skew_residuals: tuple = ()
    null_space_dim: Optional[int] = None
    reason: str = ""
    options: SolverOptions = field(default_factory=SolverOptions)

    @property
    def skewable(self):
        return self.status is Status.SKEWABLE

    def conjugates(self, matrices):
        """U^-1 S U for each given matrix (only meaningful for a Skewable certificate)"""
        if self.U is None:
            raise ValueError(f"a {self.status.value} certificate carries no frame change")
        return conjugate_stack(np.asarray(matrices, dtype=float), self.U)


def symmetric_basis_index(m):
    """Coordinates (p, q), p <= q, of a symmetric m x m unknown, in row-major order"""
    return tuple((p, q) for p in range(m) for q in range(p, m))


def _symmetric_units(m):
    # Off-diagonal units carry 1/sqrt(2) on both entries so coordinates are Frobenius-isometric
    index = symmetric_basis_index(m)
    units = np.zeros((len(index), m, m))
    for c, (p, q) in enumerate(index):
        if p == q:
            units[c, p, p] = 1.0
        else:
            units[c, p, q] = units[c, q, p] = np.sqrt(0.5)
    return units


def sylvester_operator(matrices):
    """Matrix of X -> upper triangles of S_i X + X S_i^T, stacked over i"""
    matrices = np.asarray(matrices, dtype=float)
    k, m = matrices.shape[0], matrices.shape[1]
    units = _symmetric_units(m)
    upper = np.triu_indices(m)

    products = np.einsum("iab,cbd->icad", matrices, units)
    images = products + products.transpose(0, 1, 3, 2)
    rows = images[:, :, upper[0], upper[1]]
    return rows.transpose(0, 2, 1).reshape(k * len(upper[0]), units.shape[0])


def sylvester_residual(matrices, X):
    return max((linalg.norm(S @ X + X @ S.T) for S in matrices), default=0.0)


def sylvester_null_space(coefficients, tol=settings.NULL_TOL):
    if tol <= 0:
        raise ValueError("null-space tolerance must be positive")
    nonzero = coefficient_set_for(coefficients).nonzero()
    if len(nonzero) == 0:
        raise VacuousProblemError("every coefficient matrix is zero; any A solves the system")

    m = nonzero.m
    operator = sylvester_operator(nonzero.matrices)
    _, s, vh = linalg.svd(operator)
    kept = int(np.sum(s >= tol * s[0]))

    units = _symmetric_units(m)
    basis = np.tensordot(vh[kept:], units, axes=1)
    for X in basis:
        if np.trace(X) < 0:
            X *= -1.0

    residual = max((sylvester_residual(nonzero.matrices, X) for X in basis), default=0.0)
    log.debug("Sylvester system: %d equations, %d unknowns, null space dim %d (residual %.2e)",
              operator.shape[0], operator.shape[1], basis.shape[0], residual)
    basis.setflags(write=False)
    return NullSpaceBasis(basis=basis, residual=float(residual), singular_values=s)


def _accept(X, eps_pd):
    w = linalg.eigvalsh(X)
    return w[0] > eps_pd * np.max(np.abs(w))


def _normalize_trace(X):
    X = X * (X.shape[0] / np.trace(X))
    return (X + X.T) / 2


def _ascend(basis, c, iterations):
    """Projected subgradient ascent of lambda_min(sum c_j B_j) over the unit ball"""
    best_value, best_c = -np.inf, c.copy()
    for k in range(1, iterations + 1):
        w, v = linalg.eigh(np.tensordot(c, basis, axes=1), subset_by_index=[0, 0])
        if w[0] > best_value:
            best_value, best_c = w[0], c.copy()
        v = v[:, 0]
        gradient = np.einsum("a,jab,b->j", v, basis, v)
        c = c + gradient / k
        norm = linalg.norm(c)
        if norm > 1.0:
            c /= norm
    return best_value, best_c


def find_positive_definite(null_basis, eps_pd=settings.EPS_PD, restarts=settings.RESTARTS,
                           rng_seed=0, iterations=settings.ITERATIONS):
    """A positive-definite element of the null space scaled to trace m, or None"""
    if eps_pd <= 0 or restarts < 1:
        raise ValueError("eps_pd must be positive and restarts at least 1")

    d = null_basis.dimension
    if d == 0:
        return None

    basis = null_basis.basis
    if d == 1:
        for sign in (1.0, -1.0):
            if _accept(sign * basis[0], eps_pd):
                return _normalize_trace(sign * basis[0])
        return None

    rng = np.random.default_rng(rng_seed)
    # Restart 0 starts from the projection of the identity onto the solution space
    start = np.trace(basis, axis1=1, axis2=2)
    best_value, best_c = -np.inf, None
    for restart in range(restarts):
        if restart > 0 or not np.any(start):
            start = rng.standard_normal(d)
        start = start / linalg.norm(start)

        value, c = _ascend(basis, start, iterations)
        log.debug("PD search restart %d: lambda_min %.3e", restart, value)
        if value > best_value:
            best_value, best_c = value, c
        if best_value > 0 and _accept(np.tensordot(best_c, basis, axes=1), eps_pd):
            break

    X = np.tensordot(best_c, basis, axes=1)
    if _accept(X, eps_pd):
        return _normalize_trace(X)
    log.debug("no positive-definite element found in a %d-dimensional solution space", d)
    return None


def symmetric_sqrt(A):
    """U = V diag(sqrt(lambda)) V^T for symmetric positive-definite A"""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {A.shape}")
    if linalg.norm(A - A.T) > settings.SQRT_SYM_TOL * max(1.0, linalg.norm(A)):
        raise NotSymmetricError("square root needs a symmetric matrix")

    w, V = linalg.eigh((A + A.T) / 2)
    if w[0] <= 0:
        raise NotPositiveDefiniteError(f"matrix is not positive definite (smallest eigenvalue {w[0]:.3e})")
    U = (V * np.sqrt(w)) @ V.T
    return (U + U.T) / 2


def dual_solution(A):
    """A^-1, which solves the frame-side system X S + S^T X = 0 whenever A solves S A + A S^T = 0"""
    X = linalg.inv(A)
    return (X + X.T) / 2


def quick_reject(matrices, tol=settings.REJECT_TOL):
    """Reason string when some S_i cannot be similar to a skew matrix, else None"""
    for k, S in enumerate(matrices):
        scale = linalg.norm(S)
        if scale == 0.0:
            continue
        trace = np.trace(S)
        if abs(trace) > tol * scale:
            return f"matrix {k + 1} has trace {trace:.6g}; skew matrices are traceless"
        worst = np.max(np.abs(linalg.eigvals(S).real))
        if worst > tol * scale:
            return f"matrix {k + 1} has an eigenvalue with real part {worst:.6g}; skew spectra are imaginary"
    return None


def skew_symmetrize(coefficients, opts=None):
    """Run the full decision: quick reject, null space, PD search, square root, verification"""
    opts = opts or SolverOptions()
    coefficients = coefficient_set_for(coefficients)
    m = coefficients.m
    nonzero = coefficients.nonzero()

    if len(nonzero) == 0:
        identity = np.eye(m)
        return SkewCertificate(Status.SKEWABLE, A=identity, U=identity, lambda_min_A=1.0,
                               skew_residuals=tuple(0.0 for _ in coefficients.labels),
                               reason="all coefficient matrices vanish", options=opts)

    if opts.quick_reject:
        reason = quick_reject(nonzero.matrices, opts.reject_tol)
        if reason:
            log.info("quick reject: %s", reason)
            return SkewCertificate(Status.NOT_SKEWABLE, reason=reason, options=opts)

    null_basis = sylvester_null_space(nonzero, opts.null_tol)
    d = null_basis.dimension
    A = find_positive_definite(null_basis, opts.eps_pd, opts.restarts, opts.rng_seed, opts.iterations)

    if A is None:
        if d <= 1:
            reason = f"the {d}-dimensional solution space holds no positive-definite matrix"
            log.info(reason)
            return SkewCertificate(Status.NOT_SKEWABLE, null_space_dim=d, reason=reason, options=opts)
        reason = f"no positive-definite element found in the {d}-dimensional solution space"
        log.warning("%s after %d restarts; reporting Indeterminate", reason, opts.restarts)
        return SkewCertificate(Status.INDETERMINATE, null_space_dim=d, reason=reason, options=opts)

    U = symmetric_sqrt(A)
    conjugates = conjugate_stack(coefficients.matrices, U)
    residuals = [float(linalg.norm(X + X.T)) for X in conjugates]
    limits = [opts.skew_tol * max(1.0, linalg.norm(X)) for X in conjugates]
    failed = [k for k, (r, limit) in enumerate(zip(residuals, limits)) if r > limit]
    if failed:
        reason = f"positive-definite solution found but conjugates {[k + 1 for k in failed]} fail the skew check"
        log.warning(reason)
        return SkewCertificate(Status.INDETERMINATE, null_space_dim=d, skew_residuals=tuple(residuals),
                               reason=reason, options=opts)

    lambda_min = float(linalg.eigvalsh(A)[0])
    log.info("skewable: null space dim %d, lambda_min(A) %.3e, worst residual %.2e",
             d, lambda_min, max(residuals))
    return SkewCertificate(Status.SKEWABLE, A=A, U=U, lambda_min_A=lambda_min, skew_residuals=tuple(residuals),
                           null_space_dim=d, reason="positive-definite solution found", options=opts)


def simultaneously_skewable(matrices, opts=None):
    """True when one U makes every U^-1 S U skew-symmetric"""
    return skew_symmetrize(matrices, opts).skewable


def is_skewable(form_matrix, opts=None):
    """True when the matrix of two-forms is conjugate to a skew-symmetric one"""
    return skew_symmetrize(form_matrix, opts).skewable
