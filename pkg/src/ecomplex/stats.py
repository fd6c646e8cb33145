"""Correlations, rankings, window averages and OLS with year fixed effects."""

import math
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .errors import (
    ConstantInput,
    EmptyInput,
    InsufficientData,
    InsufficientYears,
    NonpositiveDenominator,
    NonpositiveValue,
    RankDeficient,
)

# ---------------------------------------------------------------------------
# Student t via the regularized incomplete beta function


def _betacf(a, b, x, max_iter=500, eps=1e-16):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("betainc needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t, df):
    """Upper tail P(T > t) of Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def t_two_sided(t, df):
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def stars(p):
    """Significance marks; each bound is inclusive (p = 0.05 gets ``**``)."""
    if p is None or math.isnan(p):
        return ""
    if p <= 0.01:
        return "***"
    if p <= 0.05:
        return "**"
    if p <= 0.1:
        return "*"
    return ""


# ---------------------------------------------------------------------------
# Pearson correlation

Pearson = namedtuple("Pearson", "r p n")


def _paired(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-d vectors of equal length")
    keep = ~(np.isnan(x) | np.isnan(y))
    return x[keep], y[keep]


def pearson_p_value(r, n):
    """Two-sided p-value of a sample correlation ``r`` from ``n`` pairs."""
    if n < 3:
        raise InsufficientData(f"need at least 3 pairs, got {n}")
    one_minus = 1.0 - r * r
    if one_minus <= 0.0:
        return 0.0
    return betainc((n - 2) / 2.0, 0.5, one_minus)


def pearson(x, y):
    """Pearson's r with its two-sided t-test p-value, dropping pairs with a NaN.

    Sums run in exact rational arithmetic, so r is reproducible bit for bit
    and unchanged by any exactly representable positive affine rescaling.
    """
    x, y = _paired(x, y)
    n = len(x)
    if n < 3:
        raise InsufficientData(f"need at least 3 complete pairs, got {n}")
    fx = [Fraction(v) for v in x.tolist()]
    fy = [Fraction(v) for v in y.tolist()]
    mx = sum(fx) / n
    my = sum(fy) / n
    dx = [v - mx for v in fx]
    dy = [v - my for v in fy]
    sxx = sum(v * v for v in dx)
    syy = sum(v * v for v in dy)
    if sxx == 0 or syy == 0:
        raise ConstantInput("pearson input is constant")
    sxy = sum(a * b for a, b in zip(dx, dy))
    r2 = sxy * sxy / (sxx * syy)
    r = math.copysign(math.sqrt(float(r2)), sxy)
    one_minus = float(1 - r2)
    p = betainc((n - 2) / 2.0, 0.5, one_minus) if one_minus > 0 else 0.0
    return Pearson(r, p, n)


# ---------------------------------------------------------------------------
# Ranking


def rank(values):
    """Descending ranks (1 = largest), ties averaged, NaN kept as NaN."""
    values = np.asarray(values, dtype=float)
    present = ~np.isnan(values)
    if not present.any():
        raise EmptyInput("nothing to rank")
    out = np.full(values.shape, np.nan)
    out[present] = rankdata(-values[present], method="average")
    return out


@dataclass(frozen=True, eq=False)
class RankEvolution:
    metric: str
    ranks: pd.DataFrame
    first_year: int
    last_year: int
    endpoint: Pearson


def rank_evolution(scores_by_year, metric="eci"):
    """Per-year ranks of ``metric`` and the first-vs-last-year rank correlation."""
    by_year = sorted(scores_by_year, key=lambda s: s.year)
    if len(by_year) < 2:
        raise InsufficientYears("rank evolution needs at least two years")
    columns = {}
    for s in by_year:
        columns[s.year] = pd.Series(rank(getattr(s, metric)), index=list(s.regions))
    table = pd.DataFrame(columns).sort_index()
    table.index.name = "region"
    first, last = by_year[0].year, by_year[-1].year
    endpoint = pearson(table[first].to_numpy(), table[last].to_numpy())
    return RankEvolution(metric, table, first, last, endpoint)


# ---------------------------------------------------------------------------
# Derived columns


def ricd(ricu, ricr):
    """Urban-to-rural relative income ratio."""
    if not ricr > 0:
        raise NonpositiveDenominator(f"ricr must be positive, got {ricr}")
    return ricu / ricr


def log_positive(values, name="value"):
    """Natural log that rejects nonpositive entries; NaN passes through."""
    values = np.asarray(values, dtype=float)
    bad = values[~np.isnan(values)] <= 0
    if bad.any():
        raise NonpositiveValue(f"ln({name}) needs positive values")
    return np.log(values)


# ---------------------------------------------------------------------------
# Tables


class MetricTable:
    """Numeric columns keyed by ``(region, year)``, or by ``region`` after averaging."""

    def __init__(self, frame, keys=("region", "year")):
        keys = list(keys)
        frame = frame.copy()
        if list(frame.index.names) != keys:
            frame = frame.set_index(keys)
        if frame.index.has_duplicates:
            raise ValueError(f"duplicate keys in metric table: {frame.index[frame.index.duplicated()][0]}")
        frame = frame.astype(float)
        if np.isinf(frame.to_numpy()).any():
            raise ValueError("metric table values must be finite or NaN")
        self.keys = tuple(keys)
        self.frame = frame.sort_index()

    @property
    def columns(self):
        return list(self.frame.columns)

    def __len__(self):
        return len(self.frame)

    def column(self, name):
        return self.frame[name].to_numpy()


def average_window(table, columns, year_from, year_to):
    """Per-region mean of each column over the years where it is present."""
    if year_from > year_to:
        raise ValueError(f"empty window {year_from}-{year_to}")
    frame = table.frame.reset_index()
    frame = frame[(frame["year"] >= year_from) & (frame["year"] <= year_to)]
    regions = sorted(set(table.frame.index.get_level_values("region")))
    means = frame.groupby("region")[list(columns)].mean()
    means = means.reindex(regions)
    means.index.name = "region"
    return MetricTable(means, keys=("region",))


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    columns: tuple
    r: pd.DataFrame
    p: pd.DataFrame
    n: pd.DataFrame
    stars: pd.DataFrame

    def records(self):
        for a in self.columns:
            for b in self.columns:
                yield a, b, self.r.at[a, b], self.p.at[a, b], self.n.at[a, b], self.stars.at[a, b]


def correlation_matrix(table, columns):
    """Pairwise Pearson matrix; cells that cannot be computed hold NaN."""
    columns = list(columns)
    if len(columns) < 2:
        raise ValueError("correlation matrix needs at least two columns")
    r = pd.DataFrame(np.nan, index=columns, columns=columns)
    p = r.copy()
    n = pd.DataFrame(0, index=columns, columns=columns)
    st = pd.DataFrame("", index=columns, columns=columns)
    for i, a in enumerate(columns):
        for b in columns[i:]:
            try:
                res = pearson(table.column(a), table.column(b))
            except (ConstantInput, InsufficientData):
                continue
            for u, v in ((a, b), (b, a)):
                r.at[u, v] = res.r
                p.at[u, v] = res.p
                n.at[u, v] = res.n
                st.at[u, v] = stars(res.p)
    return CorrelationMatrix(tuple(columns), r, p, n, st)


# ---------------------------------------------------------------------------
# OLS with year fixed effects


@dataclass(frozen=True, eq=False)
class RegressionResult:
    dependent: str
    terms: tuple
    estimate: np.ndarray
    std_error: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray
    n_observations: int
    r2: float
    adjusted_r2: float
    rmse: float
    residuals: np.ndarray
    design: np.ndarray
    fixed_effects: tuple = ()

    @property
    def df_resid(self):
        return self.n_observations - len(self.terms)

    def coef(self, term):
        k = self.terms.index(term)
        return float(self.estimate[k])

    def stars(self, term):
        return stars(float(self.p_value[self.terms.index(term)]))

    def rows(self):
        for k, term in enumerate(self.terms):
            p = float(self.p_value[k])
            yield term, float(self.estimate[k]), float(self.std_error[k]), float(self.t_stat[k]), p, stars(p)


def _first_dependent_column(X, names):
    rank = 0
    for k in range(X.shape[1]):
        r = np.linalg.matrix_rank(X[:, : k + 1])
        if r == rank:
            return names[k]
        rank = r
    return None


def design_matrix(frame, predictors, fe="year"):
    """Intercept, predictors and fixed-effect dummies (first level dropped)."""
    cols = [np.ones(len(frame))]
    names = ["const"]
    for name in predictors:
        cols.append(frame[name].to_numpy(dtype=float))
        names.append(name)
    levels = ()
    if fe is not None:
        levels = tuple(sorted(frame[fe].unique()))
        for level in levels[1:]:
            cols.append((frame[fe] == level).to_numpy(dtype=float))
            names.append(f"{fe}_{level}")
    return np.column_stack(cols), names, levels


def ols_fixed_effects(table, dependent, predictors, fe="year"):
    """Least squares of ``dependent`` on predictors plus fixed-effect dummies.

    Rows with any missing value are dropped. Standard errors are the classical
    homoskedastic ones; RMSE divides the residual sum of squares by n.
    """
    predictors = list(predictors)
    frame = table.frame.reset_index()
    needed = [dependent, *predictors]
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise KeyError(f"columns not in table: {missing}")
    frame = frame.dropna(subset=needed).sort_values(list(table.keys)).reset_index(drop=True)
    y = frame[dependent].to_numpy(dtype=float)
    X, names, levels = design_matrix(frame, predictors, fe)
    n, k = X.shape
    if n <= k:
        raise InsufficientData(f"{n} complete observations for {k} parameters")
    if np.linalg.matrix_rank(X) < k:
        culprit = _first_dependent_column(X, names)
        raise RankDeficient(f"design matrix is rank deficient (column {culprit!r} is collinear)")

    Qm, R = np.linalg.qr(X)
    beta = np.linalg.solve(R, Qm.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - k
    Rinv = np.linalg.solve(R, np.eye(k))
    cov_unscaled = Rinv @ Rinv.T
    se = np.sqrt(rss / df * np.diag(cov_unscaled))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    p = np.array([t_two_sided(float(v), df) for v in t])
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else math.nan
    adj = 1.0 - (rss / df) / (tss / (n - 1)) if tss > 0 else math.nan
    return RegressionResult(
        dependent=dependent,
        terms=tuple(names),
        estimate=beta,
        std_error=se,
        t_stat=t,
        p_value=p,
        n_observations=n,
        r2=r2,
        adjusted_r2=adj,
        rmse=math.sqrt(rss / n),
        residuals=resid,
        design=X,
        fixed_effects=levels,
    )


def format_regression_table(results, labels=None, title=None, digits=4):
    """Side-by-side text table: coefficient with stars, standard error in parentheses."""
    labels = labels or [f"({k + 1})" for k in range(len(results))]
    # leading predictors (the complexity metric of each column) first
    terms = []
    for res in results:
        if len(res.terms) > 1 and res.terms[1] not in terms:
            terms.append(res.terms[1])
    for res in results:
        for term in res.terms:
            if term == "const" or any(term == f"year_{lv}" for lv in res.fixed_effects):
                continue
            if term not in terms:
                terms.append(term)
    body = []
    for term in terms:
        est, err = [term], [""]
        for res in results:
            if term in res.terms:
                k = res.terms.index(term)
                est.append(f"{res.estimate[k]:.{digits}f}{stars(float(res.p_value[k]))}")
                err.append(f"({res.std_error[k]:.{digits}f})")
            else:
                est.append("")
                err.append("")
        body += [est, err]
    footer = [
        ["Year FE"] + ["Yes" if len(r.fixed_effects) > 1 else "No" for r in results],
        ["Observations"] + [str(r.n_observations) for r in results],
        ["Adjusted R2"] + [f"{r.adjusted_r2:.{digits}f}" for r in results],
        ["RMSE"] + [f"{r.rmse:.{digits}f}" for r in results],
    ]
    header = [""] + list(labels)
    rows = [header] + body + footer
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]

    def fmt(row):
        return "  ".join(cell.ljust(widths[0]) if c == 0 else cell.rjust(widths[c])
                         for c, cell in enumerate(row)).rstrip()

    rule = "-" * len(fmt(header))
    lines = []
    if title:
        lines.append(title)
    lines += [rule, fmt(header), rule]
    lines += [fmt(r) for r in body]
    lines.append(rule)
    lines += [fmt(r) for r in footer]
    lines.append(rule)
    lines.append("* p<=0.1, ** p<=0.05, *** p<=0.01")
    return "\n".join(lines) + "\n"
