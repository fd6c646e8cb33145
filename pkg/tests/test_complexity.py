import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecomplex.advantage import AdvantageMatrix, binarize, rca
from ecomplex.complexity import (
    compute_scores,
    coupling_matrix,
    eci,
    entropy,
    fitness,
    fitness_step,
)
from ecomplex.errors import (
    DegenerateSpectrum,
    DisconnectedNetwork,
    EmptyAfterExclusion,
    NotConverged,
)
from ecomplex.harness import SynthSpec, eci_oracle, gen_nested, gen_noisy_nested
from ecomplex.ingest import CountMatrix


def adv(values):
    values = np.asarray(values)
    m, n = values.shape
    return AdvantageMatrix.from_binary([f"R{a}" for a in range(m)], [f"I{b}" for b in range(n)], values)


def cm(values):
    values = np.asarray(values)
    m, n = values.shape
    return CountMatrix(2000, [f"R{a}" for a in range(m)], [f"I{b}" for b in range(n)], values)


def noisy(m, n, noise=0.1, seed=1):
    c = gen_noisy_nested(SynthSpec(m, n, noise, seed))
    return c, binarize(rca(c))


# ---- coupling matrix


def test_coupling_nested_fractions():
    got = coupling_matrix(gen_nested(3, 3)).values
    want = [[11 / 18, 5 / 18, 1 / 9], [5 / 12, 5 / 12, 1 / 6], [1 / 3, 1 / 3, 1 / 3]]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)


def test_coupling_all_ones_and_identity():
    np.testing.assert_allclose(coupling_matrix(adv(np.ones((4, 3)))).values, 0.25, atol=1e-15)
    np.testing.assert_array_equal(coupling_matrix(adv(np.eye(3))).values, np.eye(3))


def test_coupling_excludes_zero_rows():
    c = coupling_matrix(adv([[1, 1], [0, 0], [1, 0]]))
    assert c.regions == ("R0", "R2") and c.excluded == ("R1",)
    with pytest.raises(EmptyAfterExclusion):
        coupling_matrix(adv(np.zeros((2, 2))))


# ---- eci


def test_eci_nested_ordering():
    res = eci(gen_nested(3, 3))
    e = res.eci
    assert e[0] > e[1] > e[2]
    assert abs(e.mean()) < 1e-12 and abs(e.std() - 1) < 1e-12
    np.testing.assert_allclose(e, eci_oracle(gen_nested(3, 3).values), atol=1e-10)


def test_eci_disconnected():
    with pytest.raises(DisconnectedNetwork) as err:
        eci(adv([[1, 0], [0, 1]]))
    assert [list(c) for c in err.value.components] == [["R0"], ["R1"]]


def test_eci_rank_one_is_degenerate():
    with pytest.raises(DegenerateSpectrum):
        eci(adv(np.ones((3, 4))))


def test_eci_missing_for_excluded_region():
    M = adv([[1, 1, 1, 0], [1, 1, 0, 0], [0, 0, 0, 0], [1, 0, 0, 1], [1, 1, 1, 1]])
    res = eci(M)
    assert np.isnan(res.eci[2])
    assert res.excluded == ("R2",)
    ok = ~np.isnan(res.eci)
    assert abs(res.eci[ok].mean()) < 1e-12


def test_eci_sign_follows_diversity():
    _, M = noisy(12, 20, seed=3)
    e = eci(M).eci
    assert np.corrcoef(e, M.diversity)[0, 1] >= 0


def test_eci_power_matches_dense():
    _, M = noisy(70, 90, noise=0.1, seed=5)
    dense = eci(M, method="dense").eci
    power = eci(M, method="power").eci
    np.testing.assert_allclose(power, dense, atol=1e-9)
    with pytest.raises(ValueError):
        eci(M, method="magic")


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 15), st.integers(4, 15), st.integers(0, 2**32), st.randoms(use_true_random=False))
def test_eci_permutation_invariance(m, n, seed, rnd):
    _, M = noisy(m, n, 0.15, seed)
    try:
        base = eci(M)
    except (DisconnectedNetwork, DegenerateSpectrum):
        return
    rp = list(range(m))
    ip = list(range(M.shape[1]))
    rnd.shuffle(rp)
    rnd.shuffle(ip)
    P = AdvantageMatrix.from_binary(
        [M.regions[a] for a in rp], [M.industries[b] for b in ip], M.values[np.ix_(rp, ip)]
    )
    got = dict(zip(P.regions, eci(P).eci))
    for region, value in zip(base.regions, base.eci):
        assert abs(got[region] - value) < 1e-9


# ---- fitness


def test_fitness_all_ones():
    res = fitness(adv(np.ones((3, 5))))
    assert res.iterations == 1
    np.testing.assert_array_equal(res.fitness, 1.0)
    np.testing.assert_array_equal(res.complexity, 1.0)


def test_fitness_nested_ordering():
    res = fitness(gen_nested(3, 3), tol=1e-6)
    F, Q = res.fitness, res.complexity
    assert F[0] > F[1] > F[2]
    assert Q[2] > Q[1] > Q[0]
    assert res.residual < 1e-6


def test_fitness_nested_default_tol_does_not_converge():
    # least-fit regions collapse to zero only algebraically slowly
    with pytest.raises(NotConverged) as err:
        fitness(gen_nested(3, 3), max_iter=200)
    assert err.value.max_iter == 200
    assert err.value.residual > 0


def test_fitness_zero_row_reported_missing():
    M = adv([[1, 1, 0], [0, 0, 0], [1, 0, 1], [0, 1, 1]])
    res = fitness(M)
    assert np.isnan(res.fitness[1])
    assert abs(np.nanmean(res.fitness) - 1) < 1e-12


def test_fitness_argument_checks():
    M = adv(np.ones((2, 2)))
    for kwargs in ({"max_iter": 0}, {"tol": 0}, {"f0": 0}):
        with pytest.raises(ValueError):
            fitness(M, **kwargs)


def test_fitness_fixed_point_and_initialization():
    _, M = noisy(25, 40, seed=11)
    res = fitness(M)
    Fn, Qn = fitness_step(M.values.astype(float), res.fitness, res.complexity)
    assert max(np.abs(Fn - res.fitness).max(), np.abs(Qn - res.complexity).max()) < 10 * res.residual + 1e-15
    for c in (0.01, 7.0, 1e4):
        other = fitness(M, f0=c, q0=c)
        np.testing.assert_allclose(other.fitness, res.fitness, atol=1e-8)


# ---- entropy


@pytest.mark.parametrize(
    "row,mask,want",
    [([5, 5, 5, 5], [1, 1, 1, 1], math.log(4)), ([4, 2, 9], [0, 1, 0], 0.0),
     ([3, 1, 8], [1, 1, 0], 0.5623351446188083)],
)
def test_entropy_examples(row, mask, want):
    h = entropy(cm([row]), adv([mask]))
    assert abs(h[0] - want) < 1e-12


def test_entropy_empty_support_is_missing():
    assert np.isnan(entropy(cm([[1, 2]]), adv([[0, 0]]))[0])


def test_entropy_bounded_by_log_diversity():
    c, M = noisy(20, 30, seed=2)
    h = entropy(c, M)
    assert (h >= 0).all()
    assert (h <= np.log(M.diversity) + 1e-12).all()


# ---- compute_scores


def test_compute_scores_invariants():
    c, _ = noisy(31, 50, seed=9)
    s = compute_scores(c)
    assert abs(np.nanmean(s.eci)) < 1e-9 and abs(np.nanstd(s.eci) - 1) < 1e-9
    assert abs(np.nanmean(s.fitness) - 1) < 1e-9
    assert (s.fitness >= 0).all() and (s.entropy >= 0).all()
    assert s.iterations_used > 0


def test_compute_scores_prunes():
    x = np.zeros((5, 6), int)
    x[:4, :5] = gen_noisy_nested(SynthSpec(4, 5, 0.2, 3)).counts
    s = compute_scores(cm(x))
    assert s.dropped_regions == ("R4",) and s.dropped_industries == ("I5",)
    assert s.regions == ("R0", "R1", "R2", "R3")
