# cli.py
# Command line for decomposing, ranking and skew-symmetrizing matrices of two-forms
#
#   python cli.py skewable worked_example.form --certificate worked.cert
#   python cli.py verify worked.cert worked_example.form
#   python cli.py pipeline curvature.form --connection connection.json
#
# Exit codes: 0 affirmative, 1 negative, 2 indeterminate, 64+ usage and input errors.

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import settings
from decompose import decompose, rank
from equivalence import orthogonal_factor, preserves_skew_space
from errors import SkewError
from exterior import format_label
from form_io import (
    certificate_to_dict,
    check_table,
    matrix_table,
    parse_certificate,
    parse_connection,
    parse_form_matrix_file,
    parse_matrix,
    serialize_certificate,
    verify_certificate,
)
from pipeline import Verdict, run_pipeline
from solver import SolverOptions, Status, skew_symmetrize

log = logging.getLogger(__name__)

EXIT_AFFIRMATIVE = 0
EXIT_NEGATIVE = 1
EXIT_INDETERMINATE = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66

STATUS_EXIT = {
    Status.SKEWABLE: EXIT_AFFIRMATIVE,
    Status.NOT_SKEWABLE: EXIT_NEGATIVE,
    Status.INDETERMINATE: EXIT_INDETERMINATE,
}

VERDICT_EXIT = {
    Verdict.PASSES_CURVATURE: EXIT_AFFIRMATIVE,
    Verdict.PASSES_CONNECTION: EXIT_AFFIRMATIVE,
    Verdict.NOT_METRIC: EXIT_NEGATIVE,
    Verdict.INDETERMINATE: EXIT_INDETERMINATE,
}


class UsageExitParser(argparse.ArgumentParser):
    """argparse that exits with EX_USAGE instead of 2, which is taken by Indeterminate"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _read(path):
    return Path(path).read_text(encoding="utf-8")


def _labels_of(form_file):
    return form_file.basis_labels or form_file.form_matrix.basis.pairs


def _emit(doc):
    print(json.dumps(doc, indent=2))


def cmd_decompose(args, opts):
    form_file = parse_form_matrix_file(_read(args.file))
    labels = _labels_of(form_file)
    matrices = decompose(form_file.form_matrix).in_labels(labels)

    if args.output == "structured":
        _emit({"terms": [{"label": format_label(*pair), "matrix": S.tolist()} for pair, S in zip(labels, matrices)]})
        return EXIT_AFFIRMATIVE

    print("=== COEFFICIENT MATRICES ===")
    for k, (pair, S) in enumerate(zip(labels, matrices), start=1):
        print(f"\nS{k}  ({format_label(*pair)})")
        print(matrix_table(S))
    return EXIT_AFFIRMATIVE


def cmd_rank(args, opts):
    form_file = parse_form_matrix_file(_read(args.file))
    report = rank(decompose(form_file.form_matrix), opts.null_tol)

    if args.output == "structured":
        _emit(dataclasses.asdict(report))
    else:
        print("=== CURVATURE RANK ===")
        print(f"Rank: {report.rank} of {report.skew_space_dim} (skew space of {report.m}x{report.m} matrices)")
        print(f"Full rank: {'yes' if report.full_rank else 'no'}")
        print(f"Singular value threshold: {report.threshold_used:.3e}")
    return EXIT_AFFIRMATIVE if report.full_rank else EXIT_NEGATIVE


def _print_certificate(certificate, labels, matrices):
    print("=== SKEW-SYMMETRIZATION ===")
    print(f"Status: {certificate.status.value}")
    print(f"Reason: {certificate.reason}")
    if certificate.null_space_dim is not None:
        print(f"Solution space dimension: {certificate.null_space_dim}")
    if not certificate.skewable:
        return
    print(f"\nA (trace normalized, lambda_min = {certificate.lambda_min_A:.6g})")
    print(matrix_table(certificate.A))
    print("\nU = sqrt(A)")
    print(matrix_table(certificate.U))
    for k, (pair, X) in enumerate(zip(labels, certificate.conjugates(matrices)), start=1):
        print(f"\nU^-1 S{k} U  ({format_label(*pair)})")
        print(matrix_table(X))
    print(f"\nWorst skew residual: {max(certificate.skew_residuals, default=0.0):.3e}")


def cmd_skewable(args, opts):
    form_file = parse_form_matrix_file(_read(args.file))
    certificate = skew_symmetrize(decompose(form_file.form_matrix), opts)

    if args.certificate:
        Path(args.certificate).write_text(serialize_certificate(certificate), encoding="utf-8")
        log.info("certificate written to %s", args.certificate)

    if args.output == "structured":
        _emit(certificate_to_dict(certificate))
    else:
        labels = _labels_of(form_file)
        _print_certificate(certificate, labels, decompose(form_file.form_matrix).in_labels(labels))
    return STATUS_EXIT[certificate.status]


def cmd_verify(args, opts):
    certificate = parse_certificate(_read(args.certificate))
    form_file = parse_form_matrix_file(_read(args.file))
    report = verify_certificate(certificate, decompose(form_file.form_matrix), opts)

    if args.output == "structured":
        _emit({"ok": report.ok, "status": report.status.value,
               "checks": [dataclasses.asdict(check) for check in report.checks]})
    else:
        print("=== CERTIFICATE VERIFICATION ===")
        print(f"Claimed status: {report.status.value}")
        print(f"Checked with skew_tol={opts.skew_tol:g}, eps_pd={opts.eps_pd:g}, tol={opts.null_tol:g}")
        print(check_table(report))
        print(f"\nResult: {'ACCEPTED' if report.ok else 'REJECTED'}")
    return EXIT_AFFIRMATIVE if report.ok else EXIT_NEGATIVE


def cmd_factor(args, opts):
    U = parse_matrix(_read(args.u_file))
    V = parse_matrix(_read(args.v_file))
    report = orthogonal_factor(U, V, args.ortho_tol)

    if args.output == "structured":
        _emit({"O": report.O.tolist(), "orthogonality_defect": report.orthogonality_defect,
               "det_ratio": report.det_ratio, "is_orthogonal": report.is_orthogonal,
               "tolerance": report.tolerance})
    else:
        print("=== ORTHOGONAL FACTOR O = V^-1 U ===")
        print(matrix_table(report.O))
        print(f"\n||O^T O - I||_F: {report.orthogonality_defect:.3e}")
        print(f"det(U)/det(V): {report.det_ratio:.6g}")
        print(f"Orthogonal: {'yes' if report.is_orthogonal else 'no'}")
    return EXIT_AFFIRMATIVE if report.is_orthogonal else EXIT_NEGATIVE


def cmd_preserves(args, opts):
    A = parse_matrix(_read(args.file))
    result = preserves_skew_space(A, args.ortho_tol)

    if args.output == "structured":
        _emit(result._asdict())
    else:
        print("=== SKEW SPACE PRESERVATION ===")
        print(f"Preserved: {'yes' if result.preserved else 'no'}")
        print(f"Worst relative defect: {result.worst_defect:.3e}")
    return EXIT_AFFIRMATIVE if result.preserved else EXIT_NEGATIVE


def cmd_pipeline(args, opts):
    form_file = parse_form_matrix_file(_read(args.file))
    connection = parse_connection(_read(args.connection)) if args.connection else None
    report = run_pipeline(form_file.form_matrix, connection, opts)

    if args.output == "structured":
        doc = {
            "verdict": report.verdict.value,
            "conclusion": report.conclusion,
            "rank": dataclasses.asdict(report.rank_report),
            "uniqueness_guaranteed": report.uniqueness_guaranteed,
            "certificate": certificate_to_dict(report.certificate),
            "B": None if report.B is None else report.B.tolist(),
            "transformed_curvature": None if report.transformed_curvature is None else [
                {"label": format_label(*pair), "matrix": S.tolist()}
                for pair, S in zip(report.transformed_curvature.basis.pairs, report.transformed_curvature.terms)
            ],
            "connection_skew": report.connection_skew,
        }
        _emit(doc)
        return VERDICT_EXIT[report.verdict]

    print("=== METRIC COMPATIBILITY AT A POINT ===")
    print(f"Curvature rank: {report.rank_report.rank} of {report.rank_report.skew_space_dim}"
          f"{'' if report.uniqueness_guaranteed else '  (not full rank: frame change not unique)'}")
    print(f"Skewability: {report.certificate.status.value}  ({report.certificate.reason})")
    if report.B is not None:
        print("\nFrame change B")
        print(matrix_table(report.B))
        labels = _labels_of(form_file)
        for k, (pair, X) in enumerate(zip(labels, decompose(report.transformed_curvature).in_labels(labels)), start=1):
            print(f"\nTransformed S{k}  ({format_label(*pair)})")
            print(matrix_table(X))
    if report.connection_skew is not None:
        print(f"\nConnection forms skew in new frame: {'yes' if report.connection_skew else 'no'}")
    print(f"\nVerdict: {report.verdict.value}")
    print(f"Conclusion: {report.conclusion}")
    return VERDICT_EXIT[report.verdict]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=settings.NULL_TOL,
                        help="relative singular-value cutoff for rank and null space")
    common.add_argument("--eps-pd", type=float, default=settings.EPS_PD,
                        help="relative smallest eigenvalue accepted as positive definite")
    common.add_argument("--skew-tol", type=float, default=settings.SKEW_TOL,
                        help="tolerance for the skew-symmetry checks")
    common.add_argument("--reject-tol", type=float, default=settings.REJECT_TOL,
                        help="tolerance for the trace and spectrum quick reject")
    common.add_argument("--no-quick-reject", action="store_true",
                        help="skip the trace and spectrum pre-checks")
    common.add_argument("--restarts", type=int, default=settings.RESTARTS)
    common.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed for the positive-definite search (default: ${settings.SEED_ENV_VAR} or 0)")
    common.add_argument("--ortho-tol", type=float, default=settings.ORTHO_TOL,
                        help="tolerance for orthogonality and skew-preservation tests")
    common.add_argument("--output", choices=["human", "structured"], default="human")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = UsageExitParser(prog="cli.py", description="Skew-symmetrize matrices of two-forms")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageExitParser)

    p = sub.add_parser("decompose", parents=[common], help="print the coefficient matrices S_k")
    p.add_argument("file")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("rank", parents=[common], help="curvature rank and full-rank flag")
    p.add_argument("file")
    p.set_defaults(handler=cmd_rank)

    p = sub.add_parser("skewable", parents=[common], help="decide skewability and emit a certificate")
    p.add_argument("file")
    p.add_argument("--certificate", help="write the certificate document to this path")
    p.set_defaults(handler=cmd_skewable)

    p = sub.add_parser("verify", parents=[common], help="re-check a certificate against its input")
    p.add_argument("certificate")
    p.add_argument("file")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("factor", parents=[common], help="orthogonal factor V^-1 U of two skew-symmetrizers")
    p.add_argument("u_file")
    p.add_argument("v_file")
    p.set_defaults(handler=cmd_factor)

    p = sub.add_parser("preserves", parents=[common], help="does conjugation by A keep skew matrices skew")
    p.add_argument("file")
    p.set_defaults(handler=cmd_preserves)

    p = sub.add_parser("pipeline", parents=[common], help="pointwise metric-compatibility test")
    p.add_argument("file")
    p.add_argument("--connection", help="connection one-form matrix file")
    p.set_defaults(handler=cmd_pipeline)

    return parser


def options_from_args(args):
    seed = args.seed if args.seed is not None else settings.default_seed()
    return SolverOptions(null_tol=args.tol, eps_pd=args.eps_pd, skew_tol=args.skew_tol,
                         reject_tol=args.reject_tol, restarts=args.restarts, rng_seed=seed,
                         quick_reject=not args.no_quick_reject)


def configure_logging(verbosity):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EX_USAGE
    configure_logging(args.verbose)

    try:
        opts = options_from_args(args)
        return args.handler(args, opts)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_NOINPUT
    except (SkewError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
