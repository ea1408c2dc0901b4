# pipeline.py
# Pointwise metric-compatibility test for a curvature matrix (and optionally its connection forms)
#
# Works at a single point with a constant frame change B, so the connection
# transforms by plain conjugation B^-1 omega B (no dB term).

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from decompose import RankReport, decompose, rank
from errors import DimensionMismatchError
from exterior import FormMatrix, OneForm, conjugate_form_matrix, conjugate_stack, require_invertible
from solver import SkewCertificate, SolverOptions, Status, skew_symmetrize

log = logging.getLogger(__name__)


class Verdict(str, Enum):
    NOT_METRIC = "NotMetricObstruction"
    PASSES_CURVATURE = "PassesCurvatureTest"
    PASSES_CONNECTION = "PassesConnectionTest"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True, eq=False)
class ConnectionMatrix:
    """m x m matrix of one-forms, stored as one coefficient matrix per e^i"""

    terms: np.ndarray

    def __post_init__(self):
        terms = np.array(self.terms, dtype=float)
        if terms.ndim != 3 or terms.shape[1] != terms.shape[2] or terms.shape[0] < 1:
            raise DimensionMismatchError(f"connection terms must have shape (n, m, m), got {terms.shape}")
        terms.setflags(write=False)
        object.__setattr__(self, "terms", terms)

    @property
    def n(self):
        return self.terms.shape[0]

    @property
    def m(self):
        return self.terms.shape[1]

    @classmethod
    def from_entries(cls, entries):
        """Build from an m x m nested list of OneForms sharing the same n"""
        rows = [list(row) for row in entries]
        n = rows[0][0].n
        if any(len(row) != len(rows) for row in rows):
            raise DimensionMismatchError("connection matrix must be square")
        if any(form.n != n for row in rows for form in row):
            raise DimensionMismatchError("connection entries must all be one-forms over the same n")
        return cls(np.array([[form.coeffs for form in row] for row in rows]).transpose(2, 0, 1))

    def entry(self, i, j):
        return OneForm(self.terms[:, i, j])

    def conjugate(self, B):
        B = require_invertible(B)
        if B.shape[0] != self.m:
            raise DimensionMismatchError(f"{B.shape[0]}x{B.shape[0]} frame change for a {self.m}x{self.m} connection")
        return ConnectionMatrix(conjugate_stack(self.terms, B))

    def skew_defect(self):
        """Worst ||X + X^T||_F / max(1, ||X||_F) over the coefficient matrices"""
        return max(float(np.linalg.norm(X + X.T) / max(1.0, np.linalg.norm(X))) for X in self.terms)

    def is_skew(self, tol):
        return self.skew_defect() <= tol


@dataclass(frozen=True, eq=False)
class PipelineReport:
    rank_report: RankReport
    certificate: SkewCertificate
    B: Optional[np.ndarray] = None
    transformed_curvature: Optional[FormMatrix] = None
    transformed_connection: Optional[ConnectionMatrix] = None
    connection_skew: Optional[bool] = None
    verdict: Verdict = Verdict.INDETERMINATE

    @property
    def uniqueness_guaranteed(self):
        """Full rank pins B down up to an orthogonal factor (given equal determinants)"""
        return self.rank_report.full_rank

    @property
    def conclusion(self):
        if self.verdict is Verdict.PASSES_CONNECTION:
            return "the metric making the new frame orthonormal is compatible"
        if self.verdict is Verdict.PASSES_CURVATURE:
            return "curvature is skew in the new frame; supply connection forms to finish the test"
        if self.verdict is Verdict.NOT_METRIC:
            if self.certificate.status is Status.NOT_SKEWABLE:
                return "curvature matrix is not skewable, so the connection is not metric"
            return "connection forms are not skew in the new frame, so the connection is not metric"
        return "skewability could not be decided"


def run_pipeline(curvature, connection=None, opts=None):
    opts = opts or SolverOptions()
    if connection is not None and (connection.m != curvature.m or connection.n != curvature.basis.n):
        raise DimensionMismatchError(
            f"connection is {connection.m}x{connection.m} over n={connection.n}, "
            f"curvature is {curvature.m}x{curvature.m} over n={curvature.basis.n}"
        )

    coefficients = decompose(curvature)
    rank_report = rank(coefficients, opts.null_tol)
    if not rank_report.full_rank:
        log.warning("curvature rank %d < %d: the frame change is not unique up to an orthogonal factor",
                    rank_report.rank, rank_report.skew_space_dim)

    certificate = skew_symmetrize(coefficients, opts)
    if certificate.status is Status.NOT_SKEWABLE:
        return PipelineReport(rank_report, certificate, verdict=Verdict.NOT_METRIC)
    if certificate.status is Status.INDETERMINATE:
        return PipelineReport(rank_report, certificate, verdict=Verdict.INDETERMINATE)

    B = certificate.U
    transformed = conjugate_form_matrix(curvature, B)
    if connection is None:
        return PipelineReport(rank_report, certificate, B=B, transformed_curvature=transformed,
                              verdict=Verdict.PASSES_CURVATURE)

    transformed_connection = connection.conjugate(B)
    connection_skew = transformed_connection.is_skew(opts.skew_tol)
    verdict = Verdict.PASSES_CONNECTION if connection_skew else Verdict.NOT_METRIC
    log.info("connection forms %s skew in the new frame", "are" if connection_skew else "are not")
    return PipelineReport(rank_report, certificate, B=B, transformed_curvature=transformed,
                          transformed_connection=transformed_connection, connection_skew=connection_skew,
                          verdict=verdict)
