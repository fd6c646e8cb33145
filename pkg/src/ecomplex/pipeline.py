"""Glue between per-year scores, the macro panel, and the statistics."""

import logging
import math

import numpy as np
import pandas as pd

from .complexity import compute_scores
from .errors import ConstantInput, EcomplexError, EmptyYear, InsufficientData
from .ingest import build_count_matrix
from .stats import MetricTable, log_positive, pearson, rank, ricd, stars

log = logging.getLogger(__name__)

SCORE_COLUMNS = {"eci": "eci", "fitness": "fitness", "diversity": "diversity", "entropy": "entropy"}
LOG_COLUMNS = {
    "ln_gdp_pc": "gdp_pc",
    "ln_population": "population",
    "ln_innovation": "innovation",
    "ln_trade": "trade",
}

# columns (1)-(8): ECI then Fitness, each with the same four control sets
CONTROL_SETS = (
    (),
    ("ln_population", "urbanization"),
    ("schooling", "ln_innovation"),
    ("ln_trade",),
)
REGRESSION_SPECS = tuple(
    (str(k + 1 + 4 * j), metric, (metric, *controls))
    for j, metric in enumerate(("eci", "fitness"))
    for k, controls in enumerate(CONTROL_SETS)
)

CORRELATION_COLUMNS = ("eci", "fitness", "diversity", "entropy", "gdp_pc", "ricu", "ricr", "ricd")


def yearly_scores(records, years, threshold=1.0, tol=1e-10, max_iter=10_000):
    """Scores for every year that has active firms; empty years are skipped."""
    out, skipped = [], []
    for year in years:
        try:
            counts = build_count_matrix(records, year)
        except EmptyYear:
            log.warning("no active firms in %s, skipping", year)
            skipped.append(year)
            continue
        try:
            out.append(compute_scores(counts, threshold=threshold, tol=tol, max_iter=max_iter))
        except EcomplexError as exc:
            exc.year = year
            raise
    return out, skipped


def scores_frame(scores_list):
    rows = []
    for s in scores_list:
        for a, region in enumerate(s.regions):
            row = {"region": region, "year": s.year}
            for col, attr in SCORE_COLUMNS.items():
                row[col] = float(getattr(s, attr)[a])
            rows.append(row)
    return pd.DataFrame(rows, columns=["region", "year", *SCORE_COLUMNS])


def _ricd_column(ricu, ricr):
    out = np.full(len(ricu), np.nan)
    for k, (u, r) in enumerate(zip(ricu, ricr)):
        if not (math.isnan(u) or math.isnan(r)):
            out[k] = ricd(u, r)
    return out


def metric_table(scores_list, panel=None):
    """Region-year table of complexity metrics joined with panel indicators.

    The join keeps every (region, year) that has scores; panel-only rows are
    dropped. Log columns and RICD are derived here.
    """
    frame = scores_frame(scores_list).set_index(["region", "year"])
    if panel is not None:
        frame = frame.join(panel.frame, how="left")
        for name, source in LOG_COLUMNS.items():
            frame[name] = log_positive(frame[source].to_numpy(), source)
        frame["ricd"] = _ricd_column(frame["ricu"].to_numpy(), frame["ricr"].to_numpy())
    return MetricTable(frame)


def _safe_pearson(x, y):
    try:
        return pearson(x, y)
    except (ConstantInput, InsufficientData):
        return None


def eci_fitness_series(scores_list):
    """Per-year ECI-Fitness correlation, on raw values and on ranks."""
    rows = []
    for s in sorted(scores_list, key=lambda s: s.year):
        raw = _safe_pearson(s.eci, s.fitness)
        ranked = _safe_pearson(rank(s.eci), rank(s.fitness))
        rows.append(
            (
                s.year,
                raw.r if raw else math.nan,
                raw.p if raw else math.nan,
                ranked.r if ranked else math.nan,
                ranked.p if ranked else math.nan,
                raw.n if raw else 0,
            )
        )
    return rows


DEVELOPMENT_PAIRS = (
    ("eci", "ln_gdp_pc"),
    ("fitness", "ln_gdp_pc"),
    ("eci", "ricu"),
    ("eci", "ricr"),
    ("eci", "ricd"),
)


def development_correlations(table, years):
    """Per-year correlations of complexity with development and inequality."""
    frame = table.frame.reset_index()
    rows = []
    for year in years:
        sub = frame[frame["year"] == year]
        for x, y in DEVELOPMENT_PAIRS:
            if x not in sub or y not in sub:
                continue
            res = _safe_pearson(sub[x].to_numpy(), sub[y].to_numpy())
            if res is None:
                continue
            rows.append((year, x, y, res.r, res.p, res.n, stars(res.p)))
    return rows


def diversity_ubiquity_relation(scores):
    """Pearson correlation between diversity and average ubiquity for one year."""
    return _safe_pearson(scores.diversity, scores.avg_ubiquity)
