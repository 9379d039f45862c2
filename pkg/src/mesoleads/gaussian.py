"""Functionals of number-conserving Gaussian fermionic states.

A D-mode Gaussian state is fully determined by its Hermitian covariance
matrix ``C`` with entries ``C[i, j] = <d_j^dag d_i>``; its eigenvalues are
mode occupations in [0, 1].  The state can equivalently be written as
``rho = exp(-d^dag M d) / Z`` with ``M = log((1 - C)/C)`` and
``log Z = -log det(1 - C)``.  Every functional here goes through a single
Hermitian eigendecomposition of ``C`` with occupations clamped to
``[CLAMP, 1 - CLAMP]`` so the logarithms stay finite; determinants are
accumulated in the log domain to survive the wide dynamic range that builds
up as leads grow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import xlogy

__all__ = [
    "CLAMP",
    "GaussianForm",
    "hermitian_eigh",
    "gaussian_form",
    "von_neumann_entropy",
    "relative_entropy",
    "log_fidelity",
    "fidelity",
    "thermal_covariance",
    "reduce_to_block",
]

# Occupations are clamped to [CLAMP, 1 - CLAMP] before taking logarithms.
CLAMP = 1e-12
HERMITICITY_TOL = 1e-8
SPECTRUM_TOL = 1e-8
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class GaussianForm:
    """Exponent matrix M and log partition function of a Gaussian state."""

    matrix: np.ndarray
    log_z: float


def hermitian_eigh(a: np.ndarray):
    """Full eigendecomposition of a Hermitian matrix (ascending eigenvalues)."""
    return np.linalg.eigh(a)


def _covariance_eigh(C: np.ndarray, what: str = "covariance"):
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"{what} must be a square matrix")
    if np.abs(C - C.conj().T).max() > HERMITICITY_TOL:
        raise ValueError(f"{what} is not Hermitian")
    w, U = hermitian_eigh(C)
    if w.min() < -SPECTRUM_TOL or w.max() > 1.0 + SPECTRUM_TOL:
        raise ValueError(
            f"{what} spectrum [{w.min():.3e}, {w.max():.3e}] outside [0, 1]"
        )
    return w, U


def gaussian_form(C: np.ndarray) -> GaussianForm:
    """Exponent matrix M = log((1 - C)/C) and log Z = -log det(1 - C)."""
    w, U = _covariance_eigh(C)
    lam = np.clip(w, CLAMP, 1.0 - CLAMP)
    logit = np.log1p(-lam) - np.log(lam)
    M = (U * logit) @ U.conj().T
    M = 0.5 * (M + M.conj().T)
    log_z = float(-np.log1p(-lam).sum())
    return GaussianForm(matrix=M, log_z=log_z)


def covariance_from_form(form: GaussianForm) -> np.ndarray:
    """Inverse map (1 + exp(M))^(-1); round-trip companion of gaussian_form."""
    w, U = hermitian_eigh(form.matrix)
    occ = 1.0 / (1.0 + np.exp(w))
    C = (U * occ) @ U.conj().T
    return 0.5 * (C + C.conj().T)


def von_neumann_entropy(C: np.ndarray) -> float:
    """Entropy in nats, sum of binary entropies of the mode occupations."""
    w, _ = _covariance_eigh(C)
    lam = np.clip(w, 0.0, 1.0)
    return float(-(xlogy(lam, lam) + xlogy(1.0 - lam, 1.0 - lam)).sum())


def relative_entropy(C1: np.ndarray, C2: np.ndarray) -> float:
    """Relative entropy D(rho1 || rho2) of two Gaussian states.

    Evaluates log(Z2/Z1) + Tr[(M2 - M1) C1]; non-negative up to the clamp.
    """
    C1 = np.asarray(C1)
    C2 = np.asarray(C2)
    if C1.shape != C2.shape:
        raise ValueError("covariance matrices must share a dimension")
    f1 = gaussian_form(C1)
    f2 = gaussian_form(C2)
    val = f2.log_z - f1.log_z + complex(np.trace((f2.matrix - f1.matrix) @ C1))
    if abs(val.imag) > IMAG_TOL:
        raise ArithmeticError(f"relative entropy has imaginary residue {val.imag:.3e}")
    return float(val.real)


def log_fidelity(C1: np.ndarray, C2: np.ndarray) -> float:
    """log of the fidelity Tr sqrt(rho1 rho2) between two Gaussian states.

    The determinant formula det(1 + e^{-M1/2} e^{-M2/2}) / sqrt(Z1 Z2) is
    evaluated as a sum of log(1 + mu_i) over the (real, positive) eigenvalues
    of the product.  The mu_i are obtained as squared singular values of
    R = e^{-M2/4} e^{-M1/4}, since R^dag R is similar to the product; this
    keeps small eigenvalues at full relative accuracy where a non-symmetric
    eigensolve would drown them in the norm of the large ones.
    """
    C1 = np.asarray(C1)
    C2 = np.asarray(C2)
    if C1.shape != C2.shape:
        raise ValueError("covariance matrices must share a dimension")
    w1, U1 = _covariance_eigh(C1)
    w2, U2 = _covariance_eigh(C2)
    lam1 = np.clip(w1, CLAMP, 1.0 - CLAMP)
    lam2 = np.clip(w2, CLAMP, 1.0 - CLAMP)
    # e^{-M/4} = (C / (1 - C))^{1/4}, diagonal in the eigenbasis of C.
    a1 = (lam1 / (1.0 - lam1)) ** 0.25
    a2 = (lam2 / (1.0 - lam2)) ** 0.25
    R = (U2 * a2) @ U2.conj().T @ (U1 * a1) @ U1.conj().T
    s = scipy.linalg.svdvals(R)
    log_z1 = -np.log1p(-lam1).sum()
    log_z2 = -np.log1p(-lam2).sum()
    return float(np.log1p(s**2).sum() - 0.5 * (log_z1 + log_z2))


def fidelity(C1: np.ndarray, C2: np.ndarray) -> float:
    """Fidelity Tr sqrt(rho1 rho2); equals 1 iff the states coincide."""
    return float(np.exp(log_fidelity(C1, C2)))


def thermal_covariance(model, temperature: float, chemical_potential: float = 0.0):
    """Covariance (1 + exp((H - mu)/T))^(-1) of the grand-canonical state.

    ``model`` may be an assembled extended model or a bare single-particle
    Hamiltonian matrix.
    """
    from .model import fermi_occupation  # local import to avoid cycle

    H = np.asarray(getattr(model, "hamiltonian", model))
    w, U = hermitian_eigh(H)
    occ = fermi_occupation(w, temperature, chemical_potential)
    C = (U * occ) @ U.conj().T
    return 0.5 * (C + C.conj().T)


def reduce_to_block(C: np.ndarray, indices) -> np.ndarray:
    """Principal submatrix of C on the given mode indices.

    The reduced state of a Gaussian state is Gaussian with exactly this
    covariance block.
    """
    C = np.asarray(C)
    idx = np.asarray(indices, dtype=int)
    if idx.ndim != 1 or len(idx) == 0:
        raise ValueError("indices must be a non-empty 1-d sequence")
    if len(np.unique(idx)) != len(idx):
        raise ValueError("indices must be distinct")
    if idx.min() < 0 or idx.max() >= C.shape[0]:
        raise IndexError("index out of range")
    return C[np.ix_(idx, idx)].copy()
