import numpy as np
import pytest

from cpdsplit import _backend
from cpdsplit.fields import catalog

BACKENDS = _backend.available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def problems():
    return {p.name: p for p in catalog()}


def rel_diff(a, b):
    """max|a - b| / max|b| over flattened arrays."""
    a = np.ravel(np.asarray(a, dtype=float))
    b = np.ravel(np.asarray(b, dtype=float))
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def state_rel_diff(s, r):
    return rel_diff(np.concatenate((s.x, s.v)), np.concatenate((r.x, r.v)))


def random_state(rng, problem, radius=(0.3, 1.5)):
    """Random (x, v) away from the Coulomb singularity."""
    from cpdsplit.integrators import ParticleState

    while True:
        x = rng.uniform(-radius[1], radius[1], 3)
        if np.linalg.norm(x) >= radius[0]:
            break
    v = rng.uniform(-1.0, 1.0, 3)
    return ParticleState(x, v, 0.0)
