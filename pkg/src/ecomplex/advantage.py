"""Revealed comparative advantage and the binary region-industry matrix."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ZeroMarginal
from .ingest import CountMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RcaMatrix:
    regions: tuple
    industries: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "industries", tuple(self.industries))
        if not np.isfinite(values).all() or (values < 0).any():
            raise ValueError("RCA values must be finite and nonnegative")


@dataclass(frozen=True, eq=False)
class AdvantageMatrix:
    """Binary advantage matrix plus its degree vectors.

    ``avg_ubiquity`` is NaN for regions without any advantaged industry.
    """

    regions: tuple
    industries: tuple
    values: np.ndarray
    diversity: np.ndarray
    ubiquity: np.ndarray
    avg_ubiquity: np.ndarray

    @classmethod
    def from_binary(cls, regions, industries, values):
        M = np.array(values, dtype=np.int64)
        if M.ndim != 2 or M.shape != (len(regions), len(industries)):
            raise ValueError("advantage matrix shape does not match its labels")
        if not np.isin(M, (0, 1)).all():
            raise ValueError("advantage matrix must be binary")
        diversity = M.sum(axis=1)
        ubiquity = M.sum(axis=0)
        for arr in (M, diversity, ubiquity):
            arr.setflags(write=False)
        out = cls(tuple(regions), tuple(industries), M, diversity, ubiquity, np.empty(0))
        k1 = avg_ubiquity(out)
        k1.setflags(write=False)
        object.__setattr__(out, "avg_ubiquity", k1)
        return out

    @property
    def shape(self):
        return self.values.shape

    def subset(self, region_mask=None, industry_mask=None):
        """Restrict to the selected rows/columns; degrees are recomputed."""
        rows = np.ones(len(self.regions), bool) if region_mask is None else np.asarray(region_mask, bool)
        cols = np.ones(len(self.industries), bool) if industry_mask is None else np.asarray(industry_mask, bool)
        return AdvantageMatrix.from_binary(
            [r for r, keep in zip(self.regions, rows) if keep],
            [i for i, keep in zip(self.industries, cols) if keep],
            self.values[np.ix_(rows, cols)],
        )


def prune(counts):
    """Drop all-zero region rows and industry columns.

    Returns the pruned matrix with the dropped region and industry labels.
    """
    x = counts.counts
    keep_r = x.sum(axis=1) > 0
    keep_i = x.sum(axis=0) > 0
    dropped_r = [r for r, k in zip(counts.regions, keep_r) if not k]
    dropped_i = [i for i, k in zip(counts.industries, keep_i) if not k]
    if dropped_r or dropped_i:
        log.info("year %s: pruned regions %s, industries %s", counts.year, dropped_r, dropped_i)
        counts = CountMatrix(
            counts.year,
            [r for r, k in zip(counts.regions, keep_r) if k],
            [i for i, k in zip(counts.industries, keep_i) if k],
            x[np.ix_(keep_r, keep_i)],
        )
    return counts, dropped_r, dropped_i


def rca(counts):
    x = counts.counts.astype(float)
    row = x.sum(axis=1)
    col = x.sum(axis=0)
    if (row == 0).any() or (col == 0).any():
        zr = [r for r, s in zip(counts.regions, row) if s == 0]
        zi = [i for i, s in zip(counts.industries, col) if s == 0]
        raise ZeroMarginal(f"zero marginals: regions {zr}, industries {zi}; prune first")
    total = x.sum()
    values = (x / row[:, None]) / (col[None, :] / total)
    return RcaMatrix(counts.regions, counts.industries, values)


def binarize(rca_matrix, threshold=1.0):
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    M = (rca_matrix.values >= threshold).astype(np.int64)
    return AdvantageMatrix.from_binary(rca_matrix.regions, rca_matrix.industries, M)


def avg_ubiquity(M):
    """Mean ubiquity of each region's advantaged industries (NaN if it has none)."""
    values = np.asarray(M.values)
    diversity = values.sum(axis=1)
    ubiquity = values.sum(axis=0)
    out = np.full(len(diversity), np.nan)
    ok = diversity > 0
    out[ok] = (values[ok] @ ubiquity) / diversity[ok]
    return out


@dataclass(frozen=True)
class Quadrant:
    high_diversity: bool
    high_ubiquity: bool

    @property
    def label(self):
        d = "high" if self.high_diversity else "low"
        u = "high" if self.high_ubiquity else "low"
        return f"{d}_diversity/{u}_ubiquity"


def quadrants(M):
    """Place each region relative to the mean diversity and mean average ubiquity.

    Ties go to the "high" side. Regions with undefined average ubiquity map
    to ``None`` and are left out of both means.
    """
    k1 = M.avg_ubiquity
    defined = ~np.isnan(k1)
    if not defined.any():
        raise ValueError("no region has a defined average ubiquity")
    k0 = M.diversity.astype(float)
    mean_k0 = k0[defined].mean()
    mean_k1 = k1[defined].mean()
    out = {}
    for a, region in enumerate(M.regions):
        if not defined[a]:
            out[region] = None
        else:
            out[region] = Quadrant(bool(k0[a] >= mean_k0), bool(k1[a] >= mean_k1))
    return out
