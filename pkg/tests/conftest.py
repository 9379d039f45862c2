import numpy as np
import pytest


def random_covariance(rng, dim, lo=0.05, hi=0.95):
    """Random Hermitian matrix with spectrum inside (lo, hi)."""
    phases = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    basis, _ = np.linalg.qr(phases)
    occ = rng.uniform(lo, hi, size=dim)
    return (basis * occ) @ basis.conj().T


def commuting_pair(rng, dim, lo=0.1, hi=0.9):
    """Two covariances sharing an eigenbasis (simultaneously diagonalisable)."""
    phases = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    basis, _ = np.linalg.qr(phases)
    a = (basis * rng.uniform(lo, hi, size=dim)) @ basis.conj().T
    b = (basis * rng.uniform(lo, hi, size=dim)) @ basis.conj().T
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)
