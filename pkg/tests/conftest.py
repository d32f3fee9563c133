import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gptforge.quantum import hermitian_basis

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pauli():
    """Qubit coordinates (1, x, y, z)."""
    return hermitian_basis(2, unit_first=True)


@pytest.fixture(scope="session")
def kets():
    s = 1 / np.sqrt(2)
    return {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([s, s], dtype=complex),
        "-": np.array([s, -s], dtype=complex),
        "i": np.array([s, 1j * s]),
        "-i": np.array([s, -1j * s]),
    }


def proj(k):
    return np.outer(k, np.conj(k))


def random_spanning(system, rng):
    """Random normalized spanning states and random spanning effects for ``system``."""
    from gptforge.gptcore import GptEffect, GptState

    d, u = system.dim, system.unit_effect
    states = []
    for _ in range(d):
        v = rng.uniform(-1, 1, size=d)
        v = v + (1 - u @ v) * u / (u @ u)
        states.append(GptState(system, v))
    effects = [GptEffect(system, rng.uniform(-1, 1, size=d)) for _ in range(d)]
    return states, effects


def random_polyhedral_fragment(rng, d=None):
    """Random prepare-measure fragment with explicit cone rays, dimension d <= 6.

    States are points (1, x); effects are random covectors affinely rescaled
    into [0, 1] on the states, together with their complements.
    """
    from gptforge.gptcore import GptEffect, GptFragment, GptState, SystemSpec

    d = d or int(rng.integers(2, 7))
    system = SystemSpec(f"r{d}", d, np.eye(d)[0])
    k = int(rng.integers(d, d + 4))
    pts = rng.uniform(-1, 1, size=(k, d - 1))
    if rng.uniform() < 0.3 and np.ptp(np.round(pts), axis=0).max() > 0:
        pts = np.round(pts)  # lattice points make degenerate, nearly classical instances
    S = np.hstack([np.ones((k, 1)), pts])
    effects = []
    n_eff = int(rng.integers(1, d + 2))
    while len(effects) < 2 * n_eff:
        e = rng.uniform(-1, 1, size=d)
        vals = S @ e
        lo, hi = vals.min(), vals.max()
        if hi - lo < 1e-6:
            continue
        e = (e - lo * system.unit_effect) / (hi - lo)
        effects += [e, system.unit_effect - e]
    states = [GptState(system, s) for s in S]
    effs = [GptEffect(system, e) for e in effects]
    return GptFragment((system,), states, effs, (), {}, {}, f"random-{d}")
