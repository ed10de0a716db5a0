import numpy as np
import pytest
from scipy.stats import unitary_group


def random_density(d, rng, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_povm(d, k, rng):
    """Random k-outcome POVM: ``S^{-1/2} A_a S^{-1/2}`` with ``S = sum A_a``."""
    parts = [random_density(d, rng) for _ in range(k)]
    s = sum(parts)
    w, v = np.linalg.eigh(s)
    isq = (v / np.sqrt(w)) @ v.conj().T
    eff = [isq @ a @ isq for a in parts]
    eff[-1] = eff[-1] + np.eye(d) - sum(eff)
    return [(e + e.conj().T) / 2 for e in eff]


def random_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
