"""ECI, Fitness/Complexity and Shannon entropy over an advantage matrix.

The coupling matrix ``Mt = D_p^-1 M D_i^-1 M^T`` is row-stochastic and
similar to the symmetric positive semidefinite ``S = A A^T`` with
``A = D_p^-1/2 M D_i^-1/2``. All eigen-work happens on ``S``; eigenvectors
are mapped back with ``K = D_p^-1/2 u``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .advantage import binarize, prune, rca
from .errors import (
    DegenerateSpectrum,
    DisconnectedNetwork,
    EmptyAfterExclusion,
    NotConverged,
    NumericalUnderflow,
)

log = logging.getLogger(__name__)

DENSE_MAX_DIM = 64
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_EIG_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    regions: tuple
    values: np.ndarray
    excluded: tuple = ()


def _included(M):
    """Masks of regions with diversity > 0 and industries with ubiquity > 0."""
    rows = M.diversity > 0
    cols = M.ubiquity > 0
    if not rows.any() or not cols.any():
        raise EmptyAfterExclusion("no region with a comparative advantage remains")
    return rows, cols


def coupling_matrix(M):
    rows, cols = _included(M)
    sub = np.asarray(M.values)[np.ix_(rows, cols)].astype(float)
    kp = sub.sum(axis=1)
    ki = sub.sum(axis=0)
    values = (sub / kp[:, None]) @ (sub / ki[None, :]).T
    regions = tuple(r for r, k in zip(M.regions, rows) if k)
    excluded = tuple(r for r, k in zip(M.regions, rows) if not k)
    return CouplingMatrix(regions, values, excluded)


def components(M):
    """Connected components of the bipartite graph, as lists of region labels."""
    rows, cols = _included(M)
    sub = np.asarray(M.values)[np.ix_(rows, cols)]
    m, n = sub.shape
    r, c = np.nonzero(sub)
    graph = coo_matrix((np.ones(len(r)), (r, m + c)), shape=(m + n, m + n))
    count, labels = connected_components(graph, directed=False)
    regions = [reg for reg, k in zip(M.regions, rows) if k]
    return [[regions[a] for a in range(m) if labels[a] == g] for g in range(count)]


def _symmetric_form(sub):
    kp = sub.sum(axis=1)
    ki = sub.sum(axis=0)
    A = sub / np.sqrt(kp)[:, None] / np.sqrt(ki)[None, :]
    return A @ A.T, np.sqrt(kp)


def _dense_top(S, k):
    w, U = np.linalg.eigh(S)
    order = np.argsort(w)[::-1][:k]
    return w[order], U[:, order]


def _power_top(S, u1, k, max_iter=100_000, tol=1e-13):
    """Leading ``k`` eigenpairs of ``S`` after deflating the known top vector ``u1``.

    Subspace iteration with Rayleigh-Ritz on ``S - u1 u1^T``. ``S`` is PSD,
    so the deflated operator's dominant eigenvalues are the ones wanted.
    The first returned pair is ``(1, u1)``.
    """
    m = S.shape[0]
    k = min(k, m)
    b = k - 1
    # deterministic, generic start block
    grid = np.arange(1, m + 1, dtype=float)
    V = np.column_stack([np.cos(grid * (j + 1) * 0.7311) + 0.1 * j for j in range(b)])
    prev = None
    for _ in range(max_iter):
        V -= np.outer(u1, u1 @ V)
        V, _ = np.linalg.qr(V)
        W = S @ V
        W -= np.outer(u1, u1 @ W)
        H = V.T @ W
        theta, Y = np.linalg.eigh((H + H.T) / 2)
        order = np.argsort(theta)[::-1]
        theta, Y = theta[order], Y[:, order]
        V = W @ Y
        ritz = (V / np.maximum(np.linalg.norm(V, axis=0), 1e-300))
        resid = np.linalg.norm(S @ ritz[:, 0] - theta[0] * ritz[:, 0])
        if prev is not None and resid < tol and np.max(np.abs(theta - prev)) < tol:
            break
        prev = theta
    U = np.linalg.qr(V)[0]
    vals = np.array([1.0, *(np.einsum("ij,ij->j", U, S @ U))])
    return vals, np.column_stack([u1, U])


@dataclass(frozen=True, eq=False)
class EciResult:
    regions: tuple
    eci: np.ndarray
    k: np.ndarray
    eigenvalues: np.ndarray
    excluded: tuple = ()


def _orient(K, diversity):
    """Flip K so that it correlates nonnegatively with diversity."""
    d = diversity - diversity.mean()
    c = K - K.mean()
    denom = np.linalg.norm(d) * np.linalg.norm(c)
    corr = float(d @ c) / denom if denom > 0 else 0.0
    if abs(corr) <= 1e-12:
        return K if K[int(np.argmax(diversity))] >= 0 else -K
    return K if corr > 0 else -K


def eci(M, tol=DEFAULT_EIG_TOL, method="auto"):
    """Economic complexity index from the second eigenvector of the coupling matrix.

    ``tol`` is the minimum separation between the second eigenvalue and its
    neighbours below which the spectrum is treated as degenerate. ``method``
    is ``"dense"``, ``"power"`` or ``"auto"`` (dense up to 64 regions).
    Regions without advantages come back as NaN.
    """
    rows, cols = _included(M)
    comps = components(M)
    if len(comps) > 1:
        raise DisconnectedNetwork(
            f"advantage network has {len(comps)} components; eigenvalue 1 is not simple",
            components=comps,
        )
    sub = np.asarray(M.values)[np.ix_(rows, cols)].astype(float)
    m = sub.shape[0]
    if m < 2:
        raise DegenerateSpectrum("ECI needs at least two regions")
    S, sqrt_kp = _symmetric_form(sub)
    if method == "auto":
        method = "dense" if m <= DENSE_MAX_DIM else "power"
    if method == "dense":
        vals, U = _dense_top(S, 3)
    elif method == "power":
        vals, U = _power_top(S, sqrt_kp / np.linalg.norm(sqrt_kp), 3)
    else:
        raise ValueError(f"unknown eigen method {method!r}")

    lam2 = vals[1]
    if lam2 < tol:
        raise DegenerateSpectrum(f"coupling matrix has rank one (second eigenvalue {lam2:.3e})")
    if len(vals) > 2 and lam2 - vals[2] < tol:
        raise DegenerateSpectrum(
            f"second eigenvalue {lam2:.12g} is not simple (next {vals[2]:.12g})"
        )
    K = U[:, 1] / sqrt_kp
    sd = K.std()
    if not sd > tol * np.abs(K).max():
        raise DegenerateSpectrum("second eigenvector is constant")
    diversity = sub.sum(axis=1)
    K = _orient(K, diversity)
    sd = K.std()
    values = (K - K.mean()) / sd

    out = np.full(len(M.regions), np.nan)
    out[rows] = values
    full_k = np.full(len(M.regions), np.nan)
    full_k[rows] = K
    excluded = tuple(r for r, keep in zip(M.regions, rows) if not keep)
    return EciResult(tuple(M.regions), out, full_k, vals, excluded)


@dataclass(frozen=True, eq=False)
class FitnessResult:
    regions: tuple
    industries: tuple
    fitness: np.ndarray
    complexity: np.ndarray
    iterations: int
    residual: float


def fitness_step(Msub, F, Q):
    """One normalized step of the Fitness-Complexity map."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        Ft = Msub @ Q
        Qt = 1.0 / (Msub.T @ (1.0 / F))
        return Ft / Ft.mean(), Qt / Qt.mean()


def fitness(M, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, f0=1.0, q0=1.0):
    """Iterate Fitness and Complexity to their fixed point.

    Stops once the L-inf change of both mean-normalized vectors is below
    ``tol``. Regions without advantages and industries nobody holds are NaN.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not (f0 > 0 and q0 > 0):
        raise ValueError("initial values must be strictly positive")
    rows, cols = _included(M)
    sub = np.asarray(M.values)[np.ix_(rows, cols)].astype(float)
    F = np.full(sub.shape[0], float(f0))
    Q = np.full(sub.shape[1], float(q0))
    residual = np.inf
    for it in range(1, max_iter + 1):
        Fn, Qn = fitness_step(sub, F, Q)
        if not (np.isfinite(Fn).all() and np.isfinite(Qn).all()) or (Fn <= 0).any() or (Qn <= 0).any():
            raise NumericalUnderflow(f"fitness underflowed to zero at iteration {it}")
        residual = max(np.abs(Fn - F).max(), np.abs(Qn - Q).max())
        F, Q = Fn, Qn
        if residual < tol:
            break
    else:
        raise NotConverged(max_iter, float(residual))
    f_out = np.full(len(M.regions), np.nan)
    f_out[rows] = F
    q_out = np.full(len(M.industries), np.nan)
    q_out[cols] = Q
    return FitnessResult(tuple(M.regions), tuple(M.industries), f_out, q_out, it, float(residual))


def entropy(counts, M):
    """Shannon entropy (nats) of each region's firm counts over its advantaged industries."""
    row = {r: a for a, r in enumerate(counts.regions)}
    col = [counts.industries.index(i) for i in M.industries]
    x = counts.counts[:, col].astype(float)
    out = np.full(len(M.regions), np.nan)
    for a, region in enumerate(M.regions):
        w = x[row[region]] * M.values[a]
        total = w.sum()
        if total <= 0:
            continue
        s = w[w > 0] / total
        out[a] = max(0.0, float(-(s * np.log(s)).sum()))
    return out


@dataclass(frozen=True, eq=False)
class ComplexityScores:
    """All per-region and per-industry metrics for one year."""

    year: int
    regions: tuple
    industries: tuple
    eci: np.ndarray
    fitness: np.ndarray
    diversity: np.ndarray
    entropy: np.ndarray
    avg_ubiquity: np.ndarray
    q_complexity: np.ndarray
    ubiquity: np.ndarray
    iterations_used: int
    threshold: float = 1.0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    dropped_regions: tuple = ()
    dropped_industries: tuple = ()
    extra: dict = field(default_factory=dict)

    REGION_METRICS = ("eci", "fitness", "diversity", "entropy", "avg_ubiquity")
    INDUSTRY_METRICS = ("q_complexity", "ubiquity")

    def region_metric(self, name):
        return dict(zip(self.regions, getattr(self, name)))


def compute_scores(counts, threshold=1.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                   eig_tol=DEFAULT_EIG_TOL):
    """Full per-year chain: prune, RCA, binarize, ECI, Fitness, entropy."""
    pruned, dropped_r, dropped_i = prune(counts)
    M = binarize(rca(pruned), threshold)
    e = eci(M, tol=eig_tol)
    f = fitness(M, tol=tol, max_iter=max_iter)
    h = entropy(pruned, M)
    return ComplexityScores(
        year=counts.year,
        regions=M.regions,
        industries=M.industries,
        eci=e.eci,
        fitness=f.fitness,
        diversity=M.diversity.astype(float),
        entropy=h,
        avg_ubiquity=M.avg_ubiquity,
        q_complexity=f.complexity,
        ubiquity=M.ubiquity.astype(float),
        iterations_used=f.iterations,
        threshold=float(threshold),
        tol=float(tol),
        max_iter=int(max_iter),
        dropped_regions=tuple(dropped_r),
        dropped_industries=tuple(dropped_i),
        extra={"fitness_residual": f.residual, "eigenvalues": e.eigenvalues[:3].tolist()},
    )
