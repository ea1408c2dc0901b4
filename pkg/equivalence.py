# equivalence.py
# Measuring tools for how two skew-symmetrizers relate, and for conjugations that keep skew matrices skew

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

import settings
from exterior import require_invertible

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OrthogonalFactorReport:
    O: np.ndarray
    orthogonality_defect: float
    det_ratio: float
    is_orthogonal: bool
    tolerance: float


class SkewPreservation(NamedTuple):
    preserved: bool
    worst_defect: float


def elementary_skew_basis(m):
    """E_pq - E_qp for p < q: the skew matrices with exactly two nonzero entries"""
    basis = []
    for p in range(m):
        for q in range(p + 1, m):
            X = np.zeros((m, m))
            X[p, q], X[q, p] = 1.0, -1.0
            basis.append(X)
    return np.array(basis).reshape(-1, m, m)


def orthogonal_factor(U, V, tol=settings.ORTHO_TOL):
    """O = V^-1 U and how far it is from orthogonal; hypotheses are the caller's business"""
    U = require_invertible(U)
    V = require_invertible(V)
    O = linalg.solve(V, U)
    defect = float(linalg.norm(O.T @ O - np.eye(O.shape[0])))
    det_ratio = float(linalg.det(U) / linalg.det(V))
    if det_ratio < 0:
        log.info("determinants of U and V have opposite signs (ratio %.6g)", det_ratio)
    return OrthogonalFactorReport(O=O, orthogonality_defect=defect, det_ratio=det_ratio,
                                  is_orthogonal=defect <= tol, tolerance=tol)


def preserves_skew_space(A, tol=settings.ORTHO_TOL):
    """Whether X -> A^-1 X A maps every elementary skew matrix to a skew matrix"""
    A = require_invertible(A)
    lu = linalg.lu_factor(A)
    worst = 0.0
    for X in elementary_skew_basis(A.shape[0]):
        image = linalg.lu_solve(lu, X @ A)
        defect = linalg.norm(image + image.T) / linalg.norm(image)
        worst = max(worst, float(defect))
    return SkewPreservation(preserved=worst <= tol, worst_defect=worst)


def equalize_determinant(U, V):
    """Rescale V so det(V) = det(U); None when the determinants differ in sign"""
    U = require_invertible(U)
    V = require_invertible(V)
    ratio = linalg.det(U) / linalg.det(V)
    if ratio <= 0:
        return None
    return V * ratio ** (1.0 / V.shape[0])
