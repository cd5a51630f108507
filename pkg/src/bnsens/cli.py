"""Command-line front end.

Exit codes: 0 success, 2 network parse/validation failure, 3 bad query or
usage, 4 zero-probability evidence, 5 too few eligible parameters for pairs,
6 non-binary target for admissible regions, 7 target state not most likely.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Any, Sequence

from . import __version__, engine
from .bench import bench_network, parse_sizes, random_query
from .bif_io import read_bif
from .errors import (
    BNSensError,
    InsufficientParameters,
    NetworkError,
    NonBinaryTarget,
    NotMostLikely,
    QueryError,
    ZeroEvidenceProbability,
)
from .generate import network_with_parameters
from .model import BayesianNetwork, moralize
from .multiway import top_k_pairs
from .oneway import SORT_KEYS, Query, run_analysis, sensitivity_coefficients, sort_reports

EXIT_OK = 0
EXIT_NETWORK = 2
EXIT_QUERY = 3
EXIT_ZERO_EVIDENCE = 4
EXIT_INSUFFICIENT = 5
EXIT_NON_BINARY = 6
EXIT_NOT_MOST_LIKELY = 7

ANALYZE_COLUMNS = ["parameter", "value", "sensitivity_value", "vertex_proximity",
                   "second_derivative", "max_first_derivative", "monotone_sign",
                   "in_sensitivity_set"]
PAIRS_COLUMNS = ["parameter_i", "parameter_j", "sv_max"]
ADMISSIBLE_COLUMNS = ["parameter", "value", "sensitivity_value", "vertex_proximity",
                      "ar_lower", "ar_upper"]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: error: {message}", EXIT_QUERY)


# ---------------------------------------------------------------------------
# rendering

def _num(x: float, precision: int) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{precision}g}"


def _cell(x: Any, precision: int) -> str:
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return _num(x, precision)
    return str(x)


def _json_value(x: Any, precision: int) -> Any:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(_num(x, precision))
    return x


def emit(rows: list[dict], columns: list[str], fmt: str, precision: int, out) -> None:
    if fmt == "json":
        data = [{c: _json_value(r[c], precision) for c in columns} for r in rows]
        json.dump(data, out, indent=2)
        out.write("\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r[c], precision) for c in columns])


# ---------------------------------------------------------------------------
# commands

def _load(path: str) -> BayesianNetwork:
    try:
        return read_bif(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_NETWORK) from None
    except (NetworkError, UnicodeDecodeError) as exc:
        raise CliError(f"invalid network {path}: {exc}", EXIT_NETWORK) from None


def _query(bn: BayesianNetwork, args) -> Query:
    if not args.target:
        raise CliError("--target VAR=state is required", EXIT_QUERY)
    try:
        return Query.parse(bn, args.target, args.evidence or ())
    except (QueryError, NetworkError) as exc:
        raise CliError(f"bad query: {exc}", EXIT_QUERY) from None


def cmd_analyze(args, out) -> int:
    bn = _load(args.network)
    q = _query(bn, args)
    result = run_analysis(bn, q)
    reports = sort_reports(result.reports, args.sort_by)
    rows = []
    for r in reports[: args.top]:
        rows.append({
            "parameter": bn.describe(r.parameter),
            "value": r.value,
            "sensitivity_value": r.sensitivity_value,
            "vertex_proximity": r.vertex_proximity,
            "second_derivative": r.second_derivative,
            "max_first_derivative": r.max_first_derivative,
            "monotone_sign": r.monotone_sign,
            "in_sensitivity_set": r.in_sensitivity_set,
        })
    emit(rows, ANALYZE_COLUMNS, args.format, args.precision, out)
    n_na = sum(1 for r in result.reports if not r.applicable)
    print(f"{q.describe(bn)} = {result.probability:.6g}; "
          f"{result.zero_sensitivity_count} of {len(result.reports)} parameters have zero "
          f"sensitivity value; {n_na} not applicable", file=sys.stderr)
    return EXIT_OK


def cmd_pairs(args, out) -> int:
    bn = _load(args.network)
    q = _query(bn, args)
    coeffs = sensitivity_coefficients(bn, q)
    pairs = top_k_pairs(coeffs, args.top, coeffs.evidence_probability)
    rows = [{"parameter_i": bn.describe(p.i), "parameter_j": bn.describe(p.j), "sv_max": p.sv_max}
            for p in pairs]
    emit(rows, PAIRS_COLUMNS, args.format, args.precision, out)
    return EXIT_OK


def cmd_admissible(args, out) -> int:
    bn = _load(args.network)
    q = _query(bn, args)
    v, s = q.target
    if bn.cardinality(v) != 2:
        raise NonBinaryTarget(f"target {bn.names[v]!r} has {bn.cardinality(v)} states")
    result = run_analysis(bn, q)
    if not result.probability > 0.5:
        raise NotMostLikely(
            f"{q.describe(bn)} = {result.probability:.6g} is not above 1/2; "
            f"query the other state instead"
        )
    rows = []
    for r in sort_reports(result.reports, "region_width")[: args.top]:
        lo, hi = r.admissible_region if r.admissible_region else (None, None)
        rows.append({
            "parameter": bn.describe(r.parameter),
            "value": r.value,
            "sensitivity_value": r.sensitivity_value,
            "vertex_proximity": r.vertex_proximity,
            "ar_lower": lo,
            "ar_upper": hi,
        })
    emit(rows, ADMISSIBLE_COLUMNS, args.format, args.precision, out)
    return EXIT_OK


def cmd_validate(args, out) -> int:
    bn = _load(args.network)
    mrf = moralize(bn)
    width = engine.induced_width(mrf, engine.elimination_order(mrf))
    row = {"network": bn.name, "nodes": bn.n_variables, "arcs": len(bn.edges),
           "parameters": bn.n_parameters, "induced_width": width}
    emit([row], list(row), args.format, args.precision, out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    if args.network:
        nets = [_load(args.network)]
    else:
        nets = [network_with_parameters(n, args.seed + k) for k, n in enumerate(args.sizes)]
    rows = []
    for k, bn in enumerate(nets):
        q = random_query(bn, args.seed + k)
        print(f"bench {bn.name}: {q.describe(bn)}", file=sys.stderr)
        row = bench_network(bn, q, repeats=args.repeats, top=args.top,
                            fd_sample=args.fd_sample, seed=args.seed)
        rows.append(row.as_dict())
    columns = list(rows[0]) if rows else []
    emit(rows, columns, args.format, args.precision, out)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "pairs": cmd_pairs,
    "admissible": cmd_admissible,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _precision(text: str) -> int:
    value = _positive(text)
    if value > 17:
        raise argparse.ArgumentTypeError("precision is at most 17 significant digits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bnsens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, network_required=True):
        if network_required:
            p.add_argument("network", help="BIF file")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--precision", type=_precision, default=6,
                       help="significant digits in the output (default 6, max 17)")

    def query(p):
        p.add_argument("--target", help="probability of interest, VAR=state")
        p.add_argument("--evidence", nargs="+", action="extend", metavar="VAR=state",
                       help="conditioning assignments")
        p.add_argument("--top", type=_positive, default=20, help="rows to print (default 20)")

    p = sub.add_parser("analyze", help="one-way sensitivity metrics for every parameter")
    common(p)
    query(p)
    p.add_argument("--sort-by", choices=sorted(SORT_KEYS), default="sensitivity_value")

    p = sub.add_parser("pairs", help="top parameter pairs by maximum 2-way sensitivity value")
    common(p)
    query(p)

    p = sub.add_parser("admissible", help="admissible regions for a binary target")
    common(p)
    query(p)

    p = sub.add_parser("validate", help="parse and validate a network")
    common(p)

    p = sub.add_parser("bench", help="timing report on generated or given networks")
    p.add_argument("network", nargs="?", help="optional BIF file (default: generated networks)")
    common(p, network_required=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", type=parse_sizes, default=[300, 750, 2000],
                   help="comma-separated minimum parameter counts of generated networks")
    p.add_argument("--repeats", type=_positive, default=5)
    p.add_argument("--top", type=_positive, default=20)
    p.add_argument("--fd-sample", type=_positive, default=20,
                   help="parameters timed to extrapolate the finite-difference baseline")
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        buf = io.StringIO()
        code = COMMANDS[args.command](args, buf)
        out.write(buf.getvalue())
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ZeroEvidenceProbability as exc:
        print(f"zero-probability evidence: {exc}", file=sys.stderr)
        return EXIT_ZERO_EVIDENCE
    except InsufficientParameters as exc:
        print(f"not enough parameters: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except NonBinaryTarget as exc:
        print(f"non-binary target: {exc}", file=sys.stderr)
        return EXIT_NON_BINARY
    except NotMostLikely as exc:
        print(f"not most likely: {exc}", file=sys.stderr)
        return EXIT_NOT_MOST_LIKELY
    except BNSensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUERY
    print(f"elapsed: {time.perf_counter() - t0:.4f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
