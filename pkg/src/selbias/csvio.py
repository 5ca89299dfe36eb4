"""CSV ingestion and result serialization."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from collections import defaultdict
from importlib import resources
from pathlib import Path

from .exceptions import IngestionError

SCORES_HEADER = ["country", "subject", "score", "weight"]
COVERAGE_HEADER = ["country", "p"]
SUMMARY_COLUMNS = ["country", "subject", "p", "observed_mean", "corrected_mean", "mean_lower", "mean_upper",
                   "warnings"]
BOUNDS_COLUMNS = ["country", "subject", "p", "statistic", "u", "lower", "upper", "warnings"]
SHIFT_COLUMNS = ["country", "official_rank", "corrected_rank", "shift", "class"]


def country_means_path() -> Path:
    """Path of the bundled PISA 2018 country table (means, ranks and coverage)."""
    return Path(str(resources.files("selbias") / "data" / "pisa2018_country_means.csv"))


def _open(path):
    return open(path, newline="", encoding="utf-8-sig")


def _real(text, what, line):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise IngestionError(f"{what} {text!r} is not a number", line=line) from None
    if not math.isfinite(value):
        raise IngestionError(f"{what} must be finite", line=line)
    return value


def _check_header(header, expected, path):
    if header is None:
        raise IngestionError(f"{path}: empty file", line=1)
    if [h.strip() for h in header] != expected:
        raise IngestionError(f"{path}: header must be {','.join(expected)}", line=1)


def read_scores(path) -> dict:
    """``{country: {subject: [(score, weight), ...]}}`` from a scores CSV."""
    out = defaultdict(lambda: defaultdict(list))
    with _open(path) as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), SCORES_HEADER, path)
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) not in (3, 4):
                raise IngestionError(f"expected 3 or 4 fields, got {len(row)}", line=line)
            country, subject = row[0].strip(), row[1].strip()
            if not country or not subject:
                raise IngestionError("country and subject must be non-empty", line=line)
            score = _real(row[2].strip(), "score", line)
            weight_text = row[3].strip() if len(row) == 4 else ""
            weight = 1.0 if weight_text == "" else _real(weight_text, "weight", line)
            if weight <= 0:
                raise IngestionError("weight must be positive", line=line)
            out[country][subject].append((score, weight))
    if not out:
        raise IngestionError(f"{path}: no score rows")
    return {c: dict(s) for c, s in out.items()}


def read_coverage(path) -> dict:
    """``{country: p}`` from a coverage CSV."""
    out = {}
    with _open(path) as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), COVERAGE_HEADER, path)
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, got {len(row)}", line=line)
            country = row[0].strip()
            if country in out:
                raise IngestionError(f"duplicate coverage row for {country!r}", line=line)
            p = _real(row[1].strip(), "p", line)
            if not 0.0 < p <= 1.0:
                raise IngestionError(f"p must satisfy 0 < p <= 1, got {p!r}", line=line)
            out[country] = p
    return out


def read_table(path) -> tuple[list[str], list[dict]]:
    """Header and rows of a generic CSV (e.g. a means table)."""
    with _open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestionError(f"{path}: empty file", line=1)
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        rows = []
        for row in reader:
            if None in row:
                raise IngestionError("too many fields", line=reader.line_num)
            rows.append({k: (v.strip() if v is not None else "") for k, v in row.items()})
    return header, rows


def format_real(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def _cell(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format_real(x)
    return "" if x is None else str(x)


def render(rows: list[dict], columns: list[str], fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps([{c: r.get(c) for c in columns} for r in rows], indent=2, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def summary_row(summary) -> dict:
    flags = list(summary.warnings)
    if summary.error:
        flags.append(f"error: {summary.error}")

    def num(x):
        return None if math.isnan(x) else x

    return {
        "country": summary.country,
        "subject": summary.subject,
        "p": summary.p,
        "observed_mean": num(summary.observed_mean),
        "corrected_mean": num(summary.corrected_mean),
        "mean_lower": num(summary.mean_lower),
        "mean_upper": num(summary.mean_upper),
        "warnings": ";".join(flags),
    }


def write_text(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
