"""Synthetic economies and independent oracles for testing.

Random draws come from SplitMix64 keyed on ``(seed, stream, row, col)``::

    h = splitmix64(seed)
    for part in (stream, row, col):
        h = splitmix64(h XOR part)
    u = (h >> 11) * 2**-53

so every cell has its own fixed value in [0, 1) on any platform. The
oracles use mpmath at 50 significant digits and share no numeric code
with the production modules.
"""

import datetime as dt
import hashlib
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .advantage import AdvantageMatrix
from .errors import DegenerateShape, DimensionTooLarge, Singular
from .ingest import CountMatrix, FirmRecord, load_provinces

MASK64 = (1 << 64) - 1
ORACLE_DPS = 50

# stream ids
FLIP, COUNT, REPAIR_ROW, REPAIR_COL, DRIFT, LIFETIME, DATE, PANEL = range(1, 9)


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def uniform(seed, stream, row, col):
    h = splitmix64(seed & MASK64)
    for part in (stream, row, col):
        h = splitmix64(h ^ (part & MASK64))
    return (h >> 11) * 2.0**-53


def normal(seed, stream, row, col):
    """Standard normal draw (Box-Muller on two keyed uniforms)."""
    u1 = uniform(seed, stream, row, 2 * col)
    u2 = uniform(seed, stream, row, 2 * col + 1)
    return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class SynthSpec:
    m: int
    n: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 2 or self.n < 2:
            raise ValueError("synthetic economies need m >= 2 and n >= 2")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _labels(prefix, count):
    width = len(str(count))
    return [f"{prefix}{k:0{width}d}" for k in range(1, count + 1)]


def staircase_widths(m, n):
    """Row sums of the nested staircase, rounding halves up."""
    return [int(math.floor(n * (m - p + 1) / m + 0.5)) for p in range(1, m + 1)]


def gen_nested(m, n):
    """Strictly nested staircase; row ``p`` holds the first ``round(n(m-p+1)/m)`` industries."""
    if m < 2 or n < 2:
        raise ValueError("gen_nested needs m >= 2 and n >= 2")
    widths = staircase_widths(m, n)
    if len(set(widths)) != m or widths[-1] < 1:
        raise DegenerateShape(f"a {m}x{n} staircase repeats row sums {widths}")
    M = np.zeros((m, n), dtype=np.int64)
    for p, w in enumerate(widths):
        M[p, :w] = 1
    return AdvantageMatrix.from_binary(_labels("R", m), _labels("I", n), M)


def gen_noisy_nested(spec, year=0):
    """Nested support with independent presence flips and counts in 1..5.

    An empty row gets the cell with the smallest REPAIR_ROW draw switched on;
    empty columns are then fixed the same way with REPAIR_COL draws.
    """
    m, n, seed = spec.m, spec.n, spec.seed
    base = np.zeros((m, n), dtype=bool)
    for p, w in enumerate(staircase_widths(m, n)):
        base[p, :w] = True
    present = base.copy()
    if spec.noise > 0:
        for p in range(m):
            for i in range(n):
                if uniform(seed, FLIP, p, i) < spec.noise:
                    present[p, i] = not present[p, i]
    for p in range(m):
        if not present[p].any():
            present[p, min(range(n), key=lambda i: uniform(seed, REPAIR_ROW, p, i))] = True
    for i in range(n):
        if not present[:, i].any():
            present[min(range(m), key=lambda p: uniform(seed, REPAIR_COL, p, i)), i] = True
    counts = np.zeros((m, n), dtype=np.int64)
    for p in range(m):
        for i in range(n):
            if present[p, i]:
                counts[p, i] = 1 + int(5 * uniform(seed, COUNT, p, i))
    return CountMatrix(year, _labels("R", m), _labels("I", n), counts)


def count_matrix_digest(matrix):
    """SHA-256 of the canonical ``year,region,industry,count`` text."""
    h = hashlib.sha256()
    h.update(b"year,region,industry,count\n")
    for a, region in enumerate(matrix.regions):
        for b, industry in enumerate(matrix.industries):
            h.update(f"{matrix.year},{region},{industry},{int(matrix.counts[a, b])}\n".encode())
    return h.hexdigest()


def _cohort_seed(seed, t):
    return splitmix64((seed ^ splitmix64(t + 1)) & MASK64)


def region_orders(m, n_years, seed, drift=0.15):
    """Staircase position of each region per year; adjacent swaps with probability ``drift``."""
    order = list(range(m))
    out = []
    for t in range(n_years):
        if t > 0:
            for k in range(m - 1):
                if uniform(seed, DRIFT, t, k) < drift:
                    order[k], order[k + 1] = order[k + 1], order[k]
        out.append(list(order))
    return out


def synth_regions(m):
    codes = list(load_provinces())
    return codes[:m] if m <= len(codes) else _labels("R", m)


def gen_firms(spec, years, drift=0.15):
    """Firm listings whose yearly cohorts follow drifting noisy staircases.

    Cohort ``t`` lists ``gen_noisy_nested`` counts for year ``years[t]``; row
    ``k`` of the staircase goes to the region in position ``k`` that year.
    Each firm stays listed for 3 to 10 years.
    """
    years = list(years)
    regions = synth_regions(spec.m)
    industries = [f"C{k:02d}" for k in range(1, spec.n + 1)]
    orders = region_orders(spec.m, len(years), spec.seed, drift)
    records = []
    for t, year in enumerate(years):
        cohort = gen_noisy_nested(SynthSpec(spec.m, spec.n, spec.noise, _cohort_seed(spec.seed, t)))
        s = _cohort_seed(spec.seed, t)
        for k in range(spec.m):
            region = regions[orders[t][k]]
            for i in range(spec.n):
                for j in range(int(cohort.counts[k, i])):
                    key = (k * spec.n + i) * 8 + j
                    life = 3 + int(8 * uniform(s, LIFETIME, key, 0))
                    month = 1 + int(12 * uniform(s, DATE, key, 0))
                    day = 1 + int(28 * uniform(s, DATE, key, 1))
                    listed = dt.date(year, month, day)
                    dmonth = 1 + int(12 * uniform(s, DATE, key, 2))
                    delisted = dt.date(year + life, dmonth, day)
                    if delisted.year > years[-1]:
                        delisted = None
                    records.append(
                        FirmRecord(f"F{year}{k:02d}{i:02d}{j}", region, industries[i], listed, delisted)
                    )
    return records


def gen_panel(spec, years, drift=0.15, ricd_year=2010):
    """Macro panel whose ln GDP pc tracks each region's staircase position.

    RICU and RICR are filled only for ``ricd_year`` (blank otherwise).
    Returns plain dict rows in panel-CSV column order.
    """
    years = list(years)
    regions = synth_regions(spec.m)
    orders = region_orders(spec.m, len(years), spec.seed, drift)
    s = spec.seed
    rows = []
    for a, region in enumerate(regions):
        level = normal(s, PANEL, a, 0)
        for t, year in enumerate(years):
            pos = orders[t].index(a)
            z = 1.0 - 2.0 * pos / (spec.m - 1)
            e = lambda c: normal(s, PANEL, a, 100 * (t + 1) + c)  # noqa: E731
            u = lambda c: uniform(s, PANEL, a, 100 * (t + 1) + c)  # noqa: E731
            ln_gdp = 9.6 + 0.45 * z + 0.07 * t + 0.15 * level + 0.08 * e(0)
            ricr = 0.8 + 0.35 * z + 0.05 * e(1)
            row = {
                "region": region,
                "year": year,
                "gdp_pc": round(math.exp(ln_gdp), 2),
                "population": round(math.exp(17.0 + 0.8 * normal(s, PANEL, a, 1) + 0.01 * t)),
                "urbanization": round(min(0.95, max(0.2, 0.5 + 0.15 * z + 0.01 * t + 0.03 * e(2))), 4),
                "schooling": round(min(0.06, max(0.005, 0.02 + 0.008 * z + 0.003 * e(3))), 5),
                "innovation": round(math.exp(8.5 + 1.2 * z + 0.1 * t + 0.3 * e(4))),
                "trade": round(math.exp(23.0 + 1.0 * z + 0.5 * level + 0.2 * e(5))),
                "ricu": round(ricr * (1.6 + 0.8 * u(6)), 4) if year == ricd_year else None,
                "ricr": round(ricr, 4) if year == ricd_year else None,
            }
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Oracles


@dataclass(frozen=True, eq=False)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray


def eigen_oracle(A, max_dim=8):
    """All eigenpairs of a small real matrix via mpmath at 50 digits, eigenvalues descending."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eigen_oracle needs a square matrix")
    if A.shape[0] > max_dim:
        raise DimensionTooLarge(f"eigen_oracle handles at most {max_dim}x{max_dim}, got {A.shape}")
    with mp.workdps(ORACLE_DPS):
        E, ER = mp.eig(mp.matrix(A.tolist()))
        return _pack_eigen(E, ER)


def _pack_eigen(E, ER):
    k = len(E)
    order = sorted(range(k), key=lambda j: -mp.re(E[j]))
    real = all(abs(mp.im(E[j])) < mp.mpf(10) ** (-30) for j in range(k))
    values, vectors = [], []
    for j in order:
        col = [ER[r, j] for r in range(k)]
        norm = mp.sqrt(mp.fsum(abs(v) ** 2 for v in col))
        if real:
            values.append(float(mp.re(E[j])))
            vectors.append([float(mp.re(v / norm)) for v in col])
        else:
            values.append(complex(E[j]))
            vectors.append([complex(v / norm) for v in col])
    return EigenPairs(np.array(values), np.array(vectors).T)


def coupling_oracle(M):
    """Coupling matrix entries as mpmath numbers, straight from the definition."""
    M = [[int(v) for v in row] for row in np.asarray(M)]
    m, n = len(M), len(M[0])
    kp = [sum(row) for row in M]
    ki = [sum(M[p][i] for p in range(m)) for i in range(n)]
    return mp.matrix(
        [
            [mp.fsum(mp.mpf(M[p][i] * M[q][i]) / ki[i] for i in range(n) if ki[i]) / kp[p] for q in range(m)]
            for p in range(m)
        ]
    )


def eci_oracle(M, max_dim=8):
    """Standardized second eigenvector of the coupling matrix, oriented with diversity."""
    M = np.asarray(M)
    if M.shape[0] > max_dim:
        raise DimensionTooLarge(f"eci_oracle handles at most {max_dim} regions")
    with mp.workdps(ORACLE_DPS):
        C = coupling_oracle(M)
        E, ER = mp.eig(C)
        m = len(E)
        order = sorted(range(m), key=lambda j: -mp.re(E[j]))
        j2 = order[1]
        K = [mp.re(ER[r, j2]) for r in range(m)]
        mean = mp.fsum(K) / m
        sd = mp.sqrt(mp.fsum((v - mean) ** 2 for v in K) / m)
        z = [(v - mean) / sd for v in K]
        d = [mp.mpf(int(v)) for v in M.sum(axis=1)]
        dm = mp.fsum(d) / m
        cov = mp.fsum((a - dm) * b for a, b in zip(d, z))
        if abs(cov) < mp.mpf(10) ** -12 * m:
            flip = z[max(range(m), key=lambda p: (d[p], -p))] < 0
        else:
            flip = cov < 0
        return np.array([float(-v if flip else v) for v in z])


@dataclass(frozen=True, eq=False)
class OlsOracle:
    coef: np.ndarray
    std_error: np.ndarray
    residuals: np.ndarray


def ols_oracle(y, X):
    """Normal equations with an explicit 50-digit inverse."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    with mp.workdps(ORACLE_DPS):
        Xm = mp.matrix(X.tolist())
        ym = mp.matrix(y.tolist())
        XtX = Xm.T * Xm
        scale = max(abs(v) for v in XtX) or mp.mpf(1)
        if abs(mp.det(XtX / scale)) < mp.mpf(10) ** -(ORACLE_DPS - 10):
            raise Singular("X'X is singular")
        try:
            inv = mp.inverse(XtX)
        except ZeroDivisionError:
            raise Singular("X'X is singular") from None
        beta = inv * (Xm.T * ym)
        resid = ym - Xm * beta
        rss = mp.fsum(v * v for v in resid)
        s2 = rss / (n - k) if n > k else mp.mpf(0)
        se = [mp.sqrt(s2 * inv[j, j]) for j in range(k)]
        return OlsOracle(
            np.array([float(v) for v in beta]),
            np.array([float(v) for v in se]),
            np.array([float(v) for v in resid]),
        )


def t_cdf_oracle(t, df):
    """Student-t CDF by numerically integrating the density."""
    with mp.workdps(30):
        nu = mp.mpf(df)
        c = mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2))
        pdf = lambda s: c * (1 + s * s / nu) ** (-(nu + 1) / 2)  # noqa: E731
        half = mp.quad(pdf, [0, abs(mp.mpf(t))])
        val = mp.mpf(0.5) + (half if t >= 0 else -half)
        return float(val)


def pearson_oracle(x, y):
    """Direct-formula r in 50 digits and a quadrature-based two-sided p."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    with mp.workdps(ORACLE_DPS):
        mx = mp.fsum(x) / n
        my = mp.fsum(y) / n
        sxy = mp.fsum((a - mx) * (b - my) for a, b in zip(x, y))
        sxx = mp.fsum((a - mx) ** 2 for a in x)
        syy = mp.fsum((b - my) ** 2 for b in y)
        r = sxy / mp.sqrt(sxx * syy)
        if abs(r) >= 1:
            return float(r), 0.0
    return float(r), p_value_oracle(float(r), n)


def p_value_oracle(r, n):
    with mp.workdps(30):
        r = mp.mpf(r)
        t = abs(r) * mp.sqrt((n - 2) / (1 - r * r))
        nu = mp.mpf(n - 2)
        c = mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2))
        pdf = lambda s: c * (1 + s * s / nu) ** (-(nu + 1) / 2)  # noqa: E731
        return float(2 * mp.quad(pdf, [t, mp.inf]))
