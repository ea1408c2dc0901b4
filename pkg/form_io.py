# form_io.py
# JSON file formats for form matrices, connections, plain matrices and certificates,
# plus independent re-checking of a certificate against its input

import json
import logging
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg

import settings
from errors import FormatError
from exterior import FormBasis, FormMatrix, format_label
from decompose import coefficient_set_for, decompose
from pipeline import ConnectionMatrix
from solver import (
    SkewCertificate,
    SolverOptions,
    Status,
    dual_solution,
    skew_symmetrize,
    sylvester_residual,
)

log = logging.getLogger(__name__)

WEDGE_LABEL = re.compile(r"^\s*e(\d+)\s*(?:\^|∧)\s*e(\d+)\s*$")
COVECTOR_LABEL = re.compile(r"^\s*e(\d+)\s*$")
CERTIFICATE_KIND = "skew-certificate"


@dataclass(frozen=True)
class FormMatrixFile:
    form_matrix: FormMatrix
    basis_labels: Optional[tuple] = None


def _load(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, line=e.lineno)
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object", line=1)
    return doc


def _positive_int(doc, key):
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise FormatError(f"expected a positive integer, got {value!r}", field=key)
    return value


def _matrix(value, m, field):
    try:
        matrix = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise FormatError("matrix must be a list of rows of numbers", field=field)
    if m is not None and matrix.shape != (m, m):
        raise FormatError(f"matrix has shape {matrix.shape}, expected ({m}, {m})", field=field)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise FormatError(f"matrix must be square, got shape {matrix.shape}", field=field)
    if not np.all(np.isfinite(matrix)):
        raise FormatError("matrix entries must be finite", field=field)
    return matrix


def parse_label(text, n, field=None):
    """'e3^e1' -> (2, 0), validated against the form dimension"""
    match = WEDGE_LABEL.match(text) if isinstance(text, str) else None
    if not match:
        raise FormatError(f"unknown wedge label {text!r}", field=field)
    i, j = int(match.group(1)) - 1, int(match.group(2)) - 1
    if not (0 <= i < n and 0 <= j < n):
        raise FormatError(f"label {text!r} is out of range for form_dim {n}", field=field)
    if i == j:
        raise FormatError(f"label {text!r} wedges a vector with itself", field=field)
    return i, j


def parse_form_matrix_file(text):
    doc = _load(text)
    n = _positive_int(doc, "form_dim")
    m = _positive_int(doc, "size")
    basis = FormBasis(n)

    declared = None
    if doc.get("basis_labels") is not None:
        if not isinstance(doc["basis_labels"], list):
            raise FormatError("basis_labels must be a list", field="basis_labels")
        declared = []
        for k, label in enumerate(doc["basis_labels"]):
            pair = parse_label(label, n, field=f"basis_labels[{k}]")
            if any({pair[0], pair[1]} == {i, j} for i, j in declared):
                raise FormatError(f"duplicate wedge label {label!r}", field=f"basis_labels[{k}]")
            declared.append(pair)
        declared = tuple(declared)

    terms = doc.get("terms", [])
    if not isinstance(terms, list):
        raise FormatError("terms must be a list", field="terms")

    items, seen = [], set()
    for k, term in enumerate(terms):
        field = f"terms[{k}]"
        if not isinstance(term, dict) or "label" not in term or "matrix" not in term:
            raise FormatError("each term needs a label and a matrix", field=field)
        pair = parse_label(term["label"], n, field=f"{field}.label")
        if declared is not None and pair not in declared:
            raise FormatError(f"label {term['label']!r} is not among basis_labels", field=f"{field}.label")
        if frozenset(pair) in seen:
            raise FormatError(f"duplicate wedge label {term['label']!r}", field=f"{field}.label")
        seen.add(frozenset(pair))
        items.append((pair, _matrix(term["matrix"], m, f"{field}.matrix")))

    return FormMatrixFile(FormMatrix.from_terms(basis, m, items), declared)


def parse_form_matrix(text):
    return parse_form_matrix_file(text).form_matrix


def serialize_form_matrix(form_matrix, labels=None):
    """JSON document for a form matrix, terms written against `labels` (lexicographic by default)"""
    labels = tuple(labels) if labels is not None else form_matrix.basis.pairs
    matrices = decompose(form_matrix).in_labels(labels)
    doc = {
        "form_dim": form_matrix.basis.n,
        "size": form_matrix.m,
        "basis_labels": [format_label(i, j) for i, j in labels],
        "terms": [{"label": format_label(i, j), "matrix": S.tolist()} for (i, j), S in zip(labels, matrices)],
    }
    return json.dumps(doc, indent=2)


def parse_connection(text):
    doc = _load(text)
    n = _positive_int(doc, "form_dim")
    m = _positive_int(doc, "size")
    stack = np.zeros((n, m, m))
    terms = doc.get("terms", [])
    if not isinstance(terms, list):
        raise FormatError("terms must be a list", field="terms")
    seen = set()
    for k, term in enumerate(terms):
        field = f"terms[{k}]"
        if not isinstance(term, dict) or "label" not in term or "matrix" not in term:
            raise FormatError("each term needs a label and a matrix", field=field)
        match = COVECTOR_LABEL.match(term["label"]) if isinstance(term["label"], str) else None
        if not match or not 1 <= int(match.group(1)) <= n:
            raise FormatError(f"unknown one-form label {term['label']!r}", field=f"{field}.label")
        i = int(match.group(1)) - 1
        if i in seen:
            raise FormatError(f"duplicate one-form label {term['label']!r}", field=f"{field}.label")
        seen.add(i)
        stack[i] = _matrix(term["matrix"], m, f"{field}.matrix")
    return ConnectionMatrix(stack)


def serialize_connection(connection):
    doc = {
        "form_dim": connection.n,
        "size": connection.m,
        "terms": [{"label": f"e{i + 1}", "matrix": X.tolist()} for i, X in enumerate(connection.terms)],
    }
    return json.dumps(doc, indent=2)


def parse_matrix(text):
    """A bare list of rows, or an object with a 'matrix' field"""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, line=e.lineno)
    if isinstance(doc, dict):
        if "matrix" not in doc:
            raise FormatError("missing matrix", field="matrix")
        return _matrix(doc["matrix"], None, "matrix")
    return _matrix(doc, None, "matrix")


def _rows(matrix):
    return None if matrix is None else np.asarray(matrix).tolist()


def certificate_to_dict(certificate):
    opts = certificate.options
    return {
        "kind": CERTIFICATE_KIND,
        "status": certificate.status.value,
        "A": _rows(certificate.A),
        "U": _rows(certificate.U),
        "lambda_min_A": certificate.lambda_min_A,
        "skew_residuals": list(certificate.skew_residuals),
        "null_space_dim": certificate.null_space_dim,
        "reason": certificate.reason,
        "tolerances": {
            "null_tol": opts.null_tol,
            "eps_pd": opts.eps_pd,
            "skew_tol": opts.skew_tol,
            "reject_tol": opts.reject_tol,
        },
        "restarts": opts.restarts,
        "iterations": opts.iterations,
        "seed": opts.rng_seed,
        "quick_reject": opts.quick_reject,
    }


def serialize_certificate(certificate):
    return json.dumps(certificate_to_dict(certificate), indent=2)


def parse_certificate(text):
    doc = _load(text)
    if doc.get("kind") != CERTIFICATE_KIND:
        raise FormatError(f"not a certificate document (kind={doc.get('kind')!r})", field="kind")
    try:
        status = Status(doc.get("status"))
    except ValueError:
        raise FormatError(f"unknown status {doc.get('status')!r}", field="status")

    tolerances = doc.get("tolerances") or {}
    if not isinstance(tolerances, dict):
        raise FormatError("tolerances must be an object", field="tolerances")
    try:
        opts = SolverOptions(
            null_tol=float(tolerances.get("null_tol", settings.NULL_TOL)),
            eps_pd=float(tolerances.get("eps_pd", settings.EPS_PD)),
            skew_tol=float(tolerances.get("skew_tol", settings.SKEW_TOL)),
            reject_tol=float(tolerances.get("reject_tol", settings.REJECT_TOL)),
            restarts=int(doc.get("restarts", settings.RESTARTS)),
            iterations=int(doc.get("iterations", settings.ITERATIONS)),
            rng_seed=int(doc.get("seed", 0)),
            quick_reject=bool(doc.get("quick_reject", True)),
        )
    except (TypeError, ValueError) as e:
        raise FormatError(str(e), field="tolerances")

    A = None if doc.get("A") is None else _matrix(doc["A"], None, "A")
    U = None if doc.get("U") is None else _matrix(doc["U"], None, "U")
    lambda_min = doc.get("lambda_min_A")
    if lambda_min is not None and (isinstance(lambda_min, bool) or not isinstance(lambda_min, (int, float))):
        raise FormatError(f"expected a number, got {lambda_min!r}", field="lambda_min_A")
    null_space_dim = doc.get("null_space_dim")
    if null_space_dim is not None and (isinstance(null_space_dim, bool) or not isinstance(null_space_dim, int)
                                       or null_space_dim < 0):
        raise FormatError(f"expected a non-negative integer, got {null_space_dim!r}", field="null_space_dim")
    reason = doc.get("reason", "")
    if not isinstance(reason, str):
        raise FormatError("reason must be a string", field="reason")
    residuals = doc.get("skew_residuals", [])
    if not isinstance(residuals, list):
        raise FormatError("residuals must be a list", field="skew_residuals")
    try:
        residuals = tuple(float(r) for r in residuals)
    except (TypeError, ValueError):
        raise FormatError("residuals must be numbers", field="skew_residuals")
    return SkewCertificate(
        status=status,
        A=A,
        U=U,
        lambda_min_A=None if lambda_min is None else float(lambda_min),
        skew_residuals=residuals,
        null_space_dim=null_space_dim,
        reason=reason,
        options=opts,
    )


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    status: Status
    checks: tuple

    @property
    def ok(self):
        return all(check.passed for check in self.checks)

    @property
    def failures(self):
        return [check for check in self.checks if not check.passed]


def _check(name, value, limit):
    value = float(value)
    return Check(name, value, float(limit), bool(value <= limit))


def _verify_skewable(certificate, coefficients, opts):
    checks = []
    m = coefficients.m
    A, U = certificate.A, certificate.U
    if A is None or U is None or A.shape != (m, m) or U.shape != (m, m):
        return [Check("A and U present with matching size", 1.0, 0.0, False)]

    norm_A = linalg.norm(A)
    checks.append(_check("A symmetric", linalg.norm(A - A.T), settings.SQRT_SYM_TOL * max(1.0, norm_A)))
    checks.append(_check("U symmetric", linalg.norm(U - U.T), settings.SQRT_SYM_TOL * max(1.0, linalg.norm(U))))

    eig_A = linalg.eigvalsh((A + A.T) / 2)
    checks.append(_check("A positive definite (-lambda_min)", -eig_A[0], -opts.eps_pd * np.max(np.abs(eig_A))))
    eig_U = linalg.eigvalsh((U + U.T) / 2)
    checks.append(Check("U positive definite (-lambda_min)", float(-eig_U[0]), 0.0, bool(eig_U[0] > 0)))
    if certificate.lambda_min_A is not None:
        checks.append(_check("stored lambda_min(A)", abs(eig_A[0] - certificate.lambda_min_A),
                             opts.skew_tol * max(1.0, abs(certificate.lambda_min_A))))
    checks.append(_check("||UU - A||_F", linalg.norm(U @ U - A), 1e-10 * norm_A))
    checks.append(_check("|trace(A) - m|", abs(np.trace(A) - m), opts.skew_tol * m))

    nonzero = coefficients.nonzero().matrices
    scale = max((linalg.norm(S) for S in nonzero), default=0.0)
    checks.append(_check("max ||S A + A S^T||_F", sylvester_residual(nonzero, A),
                         opts.skew_tol * max(1.0, scale * norm_A)))
    if eig_A[0] > 0:
        A_inv = dual_solution(A)
        dual = max((linalg.norm(A_inv @ S + S.T @ A_inv) for S in nonzero), default=0.0)
        condition = eig_A[-1] / eig_A[0]
        checks.append(_check("max ||A^-1 S + S^T A^-1||_F", dual,
                             opts.skew_tol * max(1.0, scale * linalg.norm(A_inv) * condition)))

    stored = certificate.skew_residuals
    if len(stored) != len(coefficients):
        checks.append(Check("residual count", float(len(stored)), float(len(coefficients)), False))
    if np.all(eig_U > 0):
        lu = linalg.lu_factor(U)
        for k, S in enumerate(coefficients.matrices):
            X = linalg.lu_solve(lu, S @ U)
            residual = linalg.norm(X + X.T)
            limit = opts.skew_tol * max(1.0, linalg.norm(X))
            checks.append(_check(f"skew residual {format_label(*coefficients.labels[k])}", residual, limit))
            if k < len(stored):
                checks.append(_check(f"stored residual {format_label(*coefficients.labels[k])}",
                                     abs(stored[k] - residual), limit))
    return checks


def verify_certificate(certificate, coefficients, opts=None):
    """Re-check every claim a certificate makes about the given input

    Tolerances come from `opts` or the defaults in settings. The options stored
    in the certificate only record how it was produced and are never trusted.
    """
    opts = opts or SolverOptions()
    coefficients = coefficient_set_for(coefficients)

    if certificate.status is Status.SKEWABLE:
        checks = _verify_skewable(certificate, coefficients, opts)
    else:
        checks = [
            Check("A absent", 0.0 if certificate.A is None else 1.0, 0.0, certificate.A is None),
            Check("U absent", 0.0 if certificate.U is None else 1.0, 0.0, certificate.U is None),
        ]
        again = skew_symmetrize(coefficients, opts)
        checks.append(Check(f"re-solve gives {certificate.status.value} (got {again.status.value})",
                            0.0 if again.status is certificate.status else 1.0, 0.0,
                            again.status is certificate.status))

    report = VerificationReport(certificate.status, tuple(checks))
    for check in report.failures:
        log.info("verification failed: %s = %.3e > %.3e", check.name, check.value, check.limit)
    return report


def matrix_table(matrix, labels=None, digits=6):
    """Render a matrix as an aligned pandas table"""
    matrix = np.asarray(matrix, dtype=float)
    labels = labels or [str(k + 1) for k in range(matrix.shape[0])]
    frame = pd.DataFrame(matrix, index=labels, columns=labels[: matrix.shape[1]])
    return frame.to_string(float_format=lambda x: f"{x:.{digits}g}")


def check_table(report):
    frame = pd.DataFrame(
        [(c.name, c.value, c.limit, "ok" if c.passed else "FAIL") for c in report.checks],
        columns=["check", "value", "limit", "result"],
    )
    return frame.to_string(index=False, float_format=lambda x: f"{x:.3e}")

