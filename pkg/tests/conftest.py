import random
from pathlib import Path

import pytest

from ecomplex.advantage import binarize, rca
from ecomplex.complexity import eci
from ecomplex.errors import DegenerateSpectrum, DisconnectedNetwork
from ecomplex.harness import SynthSpec, gen_noisy_nested

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

ACCEPTANCE = []


def synthetic_instances(count, max_m, max_n, base_seed, min_m=3, min_n=3):
    """Connected, non-degenerate (counts, M) pairs from noisy staircases.

    Sizes and noise come from ``random.Random(base_seed)``; instances whose
    network is disconnected or whose spectrum is degenerate are skipped.
    """
    rng = random.Random(base_seed)
    out = []
    while len(out) < count:
        m = rng.randint(min_m, max_m)
        n = rng.randint(max(min_n, 2), max_n)
        spec = SynthSpec(m, n, noise=rng.choice([0.05, 0.1, 0.2, 0.3]), seed=rng.getrandbits(64))
        counts = gen_noisy_nested(spec)
        M = binarize(rca(counts))
        try:
            eci(M)
        except (DisconnectedNetwork, DegenerateSpectrum):
            continue
        out.append((spec, counts, M))
    return out


@pytest.fixture(scope="session")
def instances30():
    return synthetic_instances(100, 30, 30, base_seed=20240601)


@pytest.fixture(scope="session")
def instances8():
    return synthetic_instances(100, 8, 12, base_seed=8)


@pytest.fixture
def record():
    def _record(cid, description, check):
        try:
            check()
        except BaseException:
            ACCEPTANCE.append((cid, description, False))
            raise
        ACCEPTANCE.append((cid, description, True))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, description, passed in sorted(ACCEPTANCE, key=lambda t: int(t[0][2:])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {cid}  {description}")
