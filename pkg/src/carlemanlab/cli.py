"""Command-line front end.

Subcommands: analyze, quasi, moments, flat, extend, certify.  Reports
are JSON with the full run configuration embedded (identical configs
produce byte-identical files); grids go to CSV, and --plot renders the
same grids to PNG files next to the delimited output.

Exit codes: 0 success, 1 certificate/verdict failure, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .errors import (
    CarlemanError,
    CertificationFailureError,
    DivergenceDetectedError,
    InvalidParameterError,
    InvalidSequenceError,
    InvalidVariantError,
    LowerBoundFailureError,
    NumericalFailureError,
    OutOfDomainError,
    OutOfSectorError,
    RangeExceededError,
    TableExhaustedError,
    WeightEvaluationError,
)
from .extension import (
    CoefficientSequence,
    ExtensionOperator,
    RightInverseConfig,
    certify_expansion,
    right_inverse_check,
)
from .growth import (
    GrowthProfile,
    gamma_index,
    korenbljum_verdict,
    omega_index,
    proximate_order_check,
    rho_order,
    sample_growth_grid,
    surjectivity_conditions,
    watson_verdict,
)
from .moments import (
    VARIANT_GENERAL,
    equivalence_certificate,
    kernel,
    moment_table,
    parse_kernel_spec,
)
from .proximate import (
    PolarPoint,
    flat_function,
    flatness_certificate,
    parse_weight_spec,
    sector_lower_bound,
    validate_weight,
)
from .sequences import certify_regularity, parse_sequence_spec

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_INVALID_ERRORS = (InvalidParameterError, InvalidSequenceError,
                   InvalidVariantError, OutOfDomainError, OutOfSectorError,
                   WeightEvaluationError, FileNotFoundError,
                   json.JSONDecodeError)
_NUMERICAL_ERRORS = (NumericalFailureError, DivergenceDetectedError,
                     RangeExceededError, TableExhaustedError)


def _jsonable(value):
    """Recursively convert records to JSON-safe values (no NaN/inf)."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, complex):
        return {"re": _jsonable(value.real), "im": _jsonable(value.imag)}
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if hasattr(value, "to_dict"):
        return _jsonable(value.to_dict())
    return str(value)


def _emit_report(args, command, results):
    report = {
        "tool": {"name": "carlemanlab", "version": __version__},
        "config": _jsonable({k: v for k, v in vars(args).items()
                             if k != "func"}),
        "command": command,
        "results": _jsonable(results),
    }
    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=False)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format(v, ".17g") if isinstance(v, float)
                              else str(v) for v in row) + "\n")


def _plot_path(args, suffix):
    stem = args.out or (args.csv or "report")
    for ext in (".json", ".csv"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
    return f"{stem}_{suffix}.png"


def _build_kernel(args, weight=None, profile=None):
    if weight is None and getattr(args, "weight", None):
        weight = parse_weight_spec(args.weight, profile=profile)
    if getattr(args, "kernel", None):
        return parse_kernel_spec(args.kernel, weight=weight)
    if weight is None:
        raise InvalidParameterError("either --kernel or --weight is required")
    return kernel(weight, VARIANT_GENERAL)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze(args):
    seq = parse_sequence_spec(args.seq)
    profile = GrowthProfile(seq)
    n = args.prefix
    regularity = certify_regularity(seq, n, 4 * n)
    omega = omega_index(profile, n)
    rho = rho_order(profile, n)
    gamma = gamma_index(profile, min(n, 20_000), slack=args.gamma_slack)
    prox = proximate_order_check(profile, max(n, 1000))
    conditions = surjectivity_conditions(profile, n)
    results = {
        "sequence": seq.name,
        "regularity": regularity,
        "omega": omega,
        "rho": rho,
        "gamma": gamma,
        "proximate_order": prox,
        "conditions_b_c": conditions,
    }
    _emit_report(args, "analyze", results)
    if args.csv or args.plot:
        rows = sample_growth_grid(profile, count=args.grid_count,
                                  r_max_index=min(n // 2, 5000))
        if args.csv:
            _write_csv(args.csv, ["t", "hM", "M", "d"], rows)
        if args.plot:
            from .plots import render_growth_grid
            render_growth_grid(rows, _plot_path(args, "growth"),
                               title=seq.name)
    return EXIT_OK


def cmd_quasi(args):
    seq = parse_sequence_spec(args.seq)
    profile = GrowthProfile(seq)
    n = args.prefix
    koren = korenbljum_verdict(profile, args.gamma, n)
    watson = watson_verdict(profile, args.gamma, n)
    _emit_report(args, "quasi", {
        "sequence": seq.name,
        "gamma": args.gamma,
        "korenbljum": koren,
        "watson": watson,
    })
    return EXIT_OK


def cmd_moments(args):
    seq = parse_sequence_spec(args.seq)
    kern = _build_kernel(args, profile=GrowthProfile(seq))
    table = moment_table(kern, args.count, tol=args.tol)
    equivalence = equivalence_certificate(table, seq)
    rows = list(table.rows())
    results = {
        "sequence": seq.name,
        "kernel": {"weight": kern.weight.describe(), "variant": kern.variant},
        "count": args.count,
        "equivalence": equivalence,
    }
    _emit_report(args, "moments", results)
    if args.csv:
        _write_csv(args.csv, ["p", "m", "logm", "relerr"], rows)
    if args.plot:
        from .plots import render_moment_table
        render_moment_table(rows, _plot_path(args, "moments"),
                            title=kern.weight.name)
    return EXIT_OK


def cmd_flat(args):
    weight = parse_weight_spec(args.weight)
    if args.seq:
        seq = parse_sequence_spec(args.seq)
    else:
        # the natural class for a monomial weight of parameter k
        seq = parse_sequence_spec(f"gevrey:{1.0 / weight.rho_target:g}")
    profile = GrowthProfile(seq)
    alpha, r0 = args.subsector
    validation = validate_weight(weight, profile)
    flat = flat_function(weight)
    bound_alpha = min(alpha, 0.98 / weight.rho_target)
    try:
        b, big_r0 = sector_lower_bound(weight, bound_alpha)
        bound = {"alpha": bound_alpha, "b": b, "R0": big_r0}
    except LowerBoundFailureError as exc:
        bound = {"alpha": bound_alpha, "error": str(exc)}
    try:
        certificate = flatness_certificate(flat, profile, alpha, r0)
        cert_payload = certificate.to_dict()
        passed = certificate.passed and validation.passed
    except CertificationFailureError as exc:
        cert_payload = {"passed": False, "error": str(exc),
                        "diagnostics": exc.diagnostics}
        passed = False
    _emit_report(args, "flat", {
        "sequence": seq.name,
        "weight": weight.describe(),
        "validation": validation,
        "sector_lower_bound": bound,
        "flatness": cert_payload,
    })
    if args.plot:
        from .plots import render_flat_profile
        render_flat_profile(flat, alpha, r0, _plot_path(args, "flat"),
                            title=flat.name)
    return EXIT_OK if passed else EXIT_CERT_FAIL


def cmd_extend(args):
    coeffs = CoefficientSequence.from_json(args.coeffs)
    weight = parse_weight_spec(args.weight) if args.weight else None
    kern = _build_kernel(args, weight)
    count = max(args.count, len(coeffs))
    table = moment_table(kern, count, tol=min(args.tol, 1e-10))
    op = ExtensionOperator(coeffs, kern, table, r0=args.r0, tol=args.tol)
    values = []
    for spec in args.eval:
        z = _parse_point(spec)
        value = op(z)
        values.append({"r": z.r, "theta": z.theta,
                       "re": value.real, "im": value.imag})
    _emit_report(args, "extend", {
        "kernel": {"weight": kern.weight.describe(), "variant": kern.variant},
        "borel": op.borel,
        "r0": op.r0,
        "values": values,
    })
    return EXIT_OK


def cmd_certify(args):
    seq = parse_sequence_spec(args.seq)
    coeffs = CoefficientSequence.from_json(args.coeffs)
    weight = parse_weight_spec(args.weight) if args.weight else None
    kern = _build_kernel(args, weight)
    count = max(args.count, len(coeffs))
    table = moment_table(kern, count, tol=1e-12)
    alpha, r0 = args.subsector
    op = ExtensionOperator(coeffs, kern, table, tol=1e-12)
    results = {"sequence": seq.name,
               "kernel": {"weight": kern.weight.describe(),
                          "variant": kern.variant}}
    passed = True
    try:
        cert = certify_expansion(op, coeffs, seq, alpha, r0,
                                 N_range=(1, args.nmax),
                                 noise_floor=1e-8)
        results["expansion"] = cert
    except CertificationFailureError as exc:
        results["expansion"] = {"passed": False, "error": str(exc),
                                "diagnostics": exc.diagnostics}
        passed = False
    report = right_inverse_check(coeffs, kern, table, seq,
                                 RightInverseConfig(n_max=min(args.nmax, 8)))
    results["right_inverse"] = report
    results["right_inverse_ok"] = report.max_weighted_error <= args.round_tol
    passed = passed and results["right_inverse_ok"]
    _emit_report(args, "certify", results)
    return EXIT_OK if passed else EXIT_CERT_FAIL


def _parse_point(spec: str) -> PolarPoint:
    if ":" in spec:
        r, theta = spec.split(":")
        return PolarPoint(float(r), float(theta))
    return PolarPoint(float(spec), 0.0)


def _parse_subsector(spec: str):
    try:
        alpha, r0 = spec.split(":")
        return float(alpha), float(r0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"subsector must be <alpha>:<r0>, got {spec!r}") from exc


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="carlemanlab",
        description="Growth, quasianalyticity and extension-operator "
                    "laboratory for Carleman ultraholomorphic classes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--csv", help="write the CSV grid here")
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the outputs")
        p.add_argument("--tol", type=float, default=1e-9,
                       help="numeric tolerance")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized grids (recorded)")

    p = sub.add_parser("analyze", help="regularity, indices and growth grid")
    p.add_argument("--seq", required=True,
                   help="gevrey:<a> | gevrey-scaled:<a>:<alpha> | "
                        "alphabeta:<alpha>:<beta> | qpower:<q> | file:<path>")
    p.add_argument("--prefix", type=int, default=10_000)
    p.add_argument("--gamma-slack", type=float, default=1.0)
    p.add_argument("--grid-count", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("quasi", help="quasianalyticity verdicts at an opening")
    p.add_argument("--seq", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--prefix", type=int, default=10_000)
    common(p)
    p.set_defaults(func=cmd_quasi)

    p = sub.add_parser("moments", help="moment table and equivalence")
    p.add_argument("--seq", required=True)
    p.add_argument("--kernel", help="classical:<k> | general (with --weight)")
    p.add_argument("--weight", help="gevrey:<k>")
    p.add_argument("--count", type=int, default=40)
    common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("flat", help="weight validation and flatness")
    p.add_argument("--weight", required=True)
    p.add_argument("--seq")
    p.add_argument("--subsector", type=_parse_subsector, default=(0.8, 1.0),
                   help="<alpha>:<r0> bounded proper subsector")
    common(p)
    p.set_defaults(func=cmd_flat)

    p = sub.add_parser("extend", help="evaluate the extension operator")
    p.add_argument("--coeffs", required=True,
                   help="JSON file with coeffs_re/coeffs_im")
    p.add_argument("--weight")
    p.add_argument("--kernel")
    p.add_argument("--eval", nargs="+", required=True,
                   help="evaluation points: <r> or <r>:<theta>")
    p.add_argument("--r0", type=float)
    p.add_argument("--count", type=int, default=40)
    common(p)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("certify", help="expansion + right-inverse checks")
    p.add_argument("--seq", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--weight")
    p.add_argument("--kernel")
    p.add_argument("--subsector", type=_parse_subsector, default=(0.5, 0.3))
    p.add_argument("--nmax", type=int, default=15)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--round-tol", type=float, default=1e-3)
    common(p)
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INVALID_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CertificationFailureError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT_FAIL
    except CarlemanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
