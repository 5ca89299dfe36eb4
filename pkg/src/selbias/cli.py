"""Command line interface.

Exit status: 0 on success, 1 on a computation error (or a failed
simulation check), 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import csvio
from .beta import CoverageRate, calibrate_beta
from .bounds import mean_bounds, quantile_bounds
from .correction import CorrectionOptions, CountryRecord, correct_countries, coverage_warnings
from .exceptions import DomainError, IngestionError, SelectionError
from .quantile import build_empirical_quantile
from .ranking import rank_by, rank_shift_table
from .simulation import DEFAULT_GRID, LatentSpec, MechanismSpec, SimulationRun, verify_recovery

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _rank_list(text):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse rank list {text!r}") from None
    if not values or any(not 0.0 <= u <= 1.0 for u in values):
        raise InputError(f"ranks must lie in [0, 1]: {text!r}")
    return values


def _load_records(args):
    scores = csvio.read_scores(args.scores)
    coverage = csvio.read_coverage(args.coverage)
    if args.subject:
        scores = {c: {args.subject: s[args.subject]} for c, s in scores.items() if args.subject in s}
        if not scores:
            raise InputError(f"no scores for subject {args.subject!r}")
    missing = sorted(set(scores) - set(coverage))
    if missing:
        raise InputError(f"no coverage row for: {', '.join(missing)}")
    return [CountryRecord(c, s, CoverageRate(coverage[c])) for c, s in scores.items()]


def _options(args):
    if args.grid is None:
        return CorrectionOptions(c_override=args.c)
    return CorrectionOptions(c_override=args.c, integration="grid", grid_points=args.grid)


def cmd_correct(args):
    records = _load_records(args)
    opts = _options(args)
    summaries = correct_countries(records, opts)
    rows = [csvio.summary_row(s) for s in summaries]
    csvio.write_text(csvio.render(rows, csvio.SUMMARY_COLUMNS, args.format), args.out)
    return EXIT_OK if all(s.ok for s in summaries) else EXIT_COMPUTE


def cmd_bounds(args):
    us = _rank_list(args.quantiles)
    records = _load_records(args)
    opts = _options(args)
    rows = []
    failed = False
    for rec in sorted(records, key=lambda r: r.country):
        p = rec.coverage.p
        flags = ";".join(coverage_warnings(p))
        for subject in sorted(rec.samples):
            base = {"country": rec.country, "subject": subject, "p": p}
            try:
                q = build_empirical_quantile(rec.samples[subject])
                for u in us:
                    iv = quantile_bounds(q, p, u, kind=args.kind)
                    rows.append({**base, "statistic": "quantile", "u": u, "lower": iv.lower,
                                 "upper": iv.upper, "warnings": flags})
                iv = mean_bounds(q, p, method=opts.integration, grid_points=opts.grid_points)
                rows.append({**base, "statistic": "mean", "u": None, "lower": iv.lower,
                             "upper": iv.upper, "warnings": flags})
            except SelectionError as exc:
                failed = True
                rows.append({**base, "statistic": "error", "warnings": f"{flags};error: {exc}".lstrip(";")})
    csvio.write_text(csvio.render(rows, csvio.BOUNDS_COLUMNS, args.format), args.out)
    return EXIT_COMPUTE if failed else EXIT_OK


def _id_column(header, requested):
    if requested:
        if requested not in header:
            raise InputError(f"unknown column {requested!r}")
        return requested
    for name in ("country", "countries"):
        if name in header:
            return name
    return header[0]


def _column_values(rows, id_col, col):
    out = []
    for i, row in enumerate(rows, start=2):
        try:
            out.append((row[id_col], float(row[col])))
        except ValueError:
            raise IngestionError(f"column {col!r} value {row[col]!r} is not a number", line=i) from None
    return out


def cmd_rank(args):
    header, rows = csvio.read_table(args.means)
    for col in (args.column, args.official_column):
        if col is not None and col not in header:
            raise InputError(f"unknown column {col!r}")
    id_col = _id_column(header, args.id_column)
    ranking = rank_by(_column_values(rows, id_col, args.column))
    if args.official_column is None:
        out = [{"country": c, "rank": r} for c, r in ranking]
        text = csvio.render(out, ["country", "rank"], args.format)
    else:
        official = rank_by(_column_values(rows, id_col, args.official_column))
        table = rank_shift_table(official, ranking)
        out = [{"country": e.country, "official_rank": e.official_rank, "corrected_rank": e.corrected_rank,
                "shift": e.shift, "class": e.magnitude_class} for e in table]
        text = csvio.render(out, csvio.SHIFT_COLUMNS, args.format)
    csvio.write_text(text, args.out)
    return EXIT_OK


def cmd_simulate(args):
    latent = LatentSpec.parse(args.latent)
    beta = None
    if args.c is not None and args.mechanism in ("beta", "beta_cost") and args.p < 1.0:
        beta = calibrate_beta(args.p, args.c)
    mechanism = MechanismSpec(args.mechanism, args.p, beta)
    grid = _rank_list(args.grid) if args.grid else list(DEFAULT_GRID)
    run = SimulationRun(seed=args.seed, n=args.n, latent=latent, mechanism=mechanism)
    report = verify_recovery(run, grid, correction=args.correction)
    if args.format == "json":
        text = json.dumps(report.to_dict(), indent=2, default=float) + "\n"
    else:
        text = report.to_text()
    csvio.write_text(text, args.out)
    return EXIT_OK if report.passed else EXIT_COMPUTE


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="selbias", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def inputs(p):
        p.add_argument("--scores", required=True, help="CSV with header country,subject,score,weight")
        p.add_argument("--coverage", required=True, help="CSV with header country,p")
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        p.add_argument("--subject", help="only process this subject")
        p.add_argument("--c", type=float, help="Beta concentration (default 1/(1-p))")
        p.add_argument("--grid", type=int, help="use midpoint-rule integration with this many nodes")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("correct", help="selection-corrected means with bounds")
    inputs(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("bounds", help="quantile and mean bounds")
    inputs(p)
    p.add_argument("--quantiles", default="0.1,0.25,0.5,0.75,0.9")
    p.add_argument("--kind", choices=("dominance", "frechet"), default="dominance")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rank", help="rank countries and tabulate rank shifts")
    p.add_argument("--means", required=True)
    p.add_argument("--column", required=True, help="column to rank by")
    p.add_argument("--official-column", help="column giving the official ranking to compare with")
    p.add_argument("--id-column", help="country identifier column (default: country/countries/first)")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("simulate", help="check recovery of a known latent distribution")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=_positive_int, default=200000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--latent", default="normal:500:100")
    p.add_argument("--mechanism", default="beta", choices=("beta", "beta_cost", "truncation", "independent"))
    p.add_argument("--correction", choices=("beta_point", "lower_bound", "identity"))
    p.add_argument("--c", type=float)
    p.add_argument("--grid", help="comma-separated ranks (default 0.1,...,0.9)")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, IngestionError, DomainError, OSError) as exc:
        print(f"selbias {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SelectionError as exc:
        print(f"selbias {args.command}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
