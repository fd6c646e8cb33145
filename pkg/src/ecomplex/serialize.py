"""Deterministic CSV/JSON output with atomic writes.

Floats are written with ``repr`` (shortest round-trip form); missing values
are empty CSV cells and JSON ``null``.
"""

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .complexity import ComplexityScores


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    return atomic_write_text(path, csv_text(header, rows))


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if math.isnan(v) else v
    if isinstance(value, Path):
        return str(value)
    return value


def json_text(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    return atomic_write_text(path, json_text(obj))


def matrix_rows(regions, industries, values):
    """Wide layout: one row per region, one column per industry."""
    header = ["region", *industries]
    rows = [[r, *values[a].tolist()] for a, r in enumerate(regions)]
    return header, rows


def tidy_region_rows(scores):
    for a, region in enumerate(scores.regions):
        for metric in ComplexityScores.REGION_METRICS:
            yield scores.year, region, metric, float(getattr(scores, metric)[a])


def tidy_industry_rows(scores):
    for a, industry in enumerate(scores.industries):
        for metric in ComplexityScores.INDUSTRY_METRICS:
            yield scores.year, industry, metric, float(getattr(scores, metric)[a])


def scores_to_dict(scores):
    return {
        "year": scores.year,
        "parameters": {"threshold": scores.threshold, "tol": scores.tol, "max_iter": scores.max_iter},
        "iterations_used": scores.iterations_used,
        "regions": list(scores.regions),
        "industries": list(scores.industries),
        "region_metrics": {m: getattr(scores, m) for m in ComplexityScores.REGION_METRICS},
        "industry_metrics": {m: getattr(scores, m) for m in ComplexityScores.INDUSTRY_METRICS},
        "dropped_regions": list(scores.dropped_regions),
        "dropped_industries": list(scores.dropped_industries),
        "diagnostics": scores.extra,
    }


def _arr(values):
    return np.array([math.nan if v is None else v for v in values], dtype=float)


def scores_from_dict(data):
    params = data["parameters"]
    rm, im = data["region_metrics"], data["industry_metrics"]
    return ComplexityScores(
        year=int(data["year"]),
        regions=tuple(data["regions"]),
        industries=tuple(data["industries"]),
        **{m: _arr(rm[m]) for m in ComplexityScores.REGION_METRICS},
        **{m: _arr(im[m]) for m in ComplexityScores.INDUSTRY_METRICS},
        iterations_used=int(data["iterations_used"]),
        threshold=float(params["threshold"]),
        tol=float(params["tol"]),
        max_iter=int(params["max_iter"]),
        dropped_regions=tuple(data.get("dropped_regions", ())),
        dropped_industries=tuple(data.get("dropped_industries", ())),
        extra=dict(data.get("diagnostics", {})),
    )


def read_scores_json(path):
    return scores_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def read_tidy_scores(path):
    """Region metrics from a tidy ``year,region,metric,value`` file as ``{(year, region): {metric: value}}``."""
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["year"]), row["region"])
            out.setdefault(key, {})[row["metric"]] = float(row["value"]) if row["value"] else math.nan
    return out
