"""Covariance-matrix dynamics: RK4 propagation and the steady state.

The covariance matrix of the extended system obeys the linear equation of
motion dC/dt = -(W C + C W^dag) + F with drift W = iH + gamma/2 and diagonal
thermal drive F.  Trajectories use classical fixed-step RK4; the stationary
state solves the continuous Sylvester equation W C + C W^dag = F by the
Bartels-Stewart reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .gaussian import hermitian_eigh
from .model import ExtendedModel

__all__ = [
    "PhysicalityError",
    "SteadyStateError",
    "PHYSICALITY_TOL",
    "drift_matrix",
    "drive_matrix",
    "initial_covariance",
    "covariance_derivative",
    "rk4_step",
    "Trajectory",
    "evolve",
    "steady_state",
]

PHYSICALITY_TOL = 1e-8
MIN_DECAY = 1e-14


class PhysicalityError(RuntimeError):
    """The covariance spectrum left [0, 1] beyond tolerance."""


class SteadyStateError(RuntimeError):
    """The Sylvester operator is singular or the solve failed to converge."""


def drift_matrix(model: ExtendedModel) -> np.ndarray:
    """Drift W = iH + gamma/2 of the covariance equation of motion."""
    return 1j * model.hamiltonian + np.diag(model.damping) / 2.0


def drive_matrix(model: ExtendedModel) -> np.ndarray:
    """Diagonal thermal drive F with entries gamma_k f_k."""
    return np.diag(model.drive).astype(complex)


def initial_covariance(model: ExtendedModel, occupations=0.5) -> np.ndarray:
    """Uncorrelated initial state: chain sites at the given occupations,
    every lead mode at its own thermal occupation.

    ``occupations`` is a scalar or one value per chain site, each in [0, 1].
    """
    n = len(model.system_indices)
    occ = np.broadcast_to(np.asarray(occupations, dtype=float), (n,))
    if occ.min() < 0.0 or occ.max() > 1.0:
        raise ValueError("site occupations must lie in [0, 1]")
    C = np.zeros((model.dim, model.dim), dtype=complex)
    C[model.system_indices, model.system_indices] = occ
    for idx, disc in zip(model.lead_indices, model.discretizations):
        C[idx, idx] = disc.occupations
    return C


def covariance_derivative(C: np.ndarray, drift: np.ndarray, drive: np.ndarray):
    """Right-hand side -(W C + C W^dag) + F of the equation of motion."""
    X = drift @ C
    out = drive - X
    out -= X.conj().T
    return out


def _assert_physical(eigenvalues: np.ndarray, when: str = ""):
    lo = float(eigenvalues.min())
    hi = float(eigenvalues.max())
    if lo < -PHYSICALITY_TOL or hi > 1.0 + PHYSICALITY_TOL:
        raise PhysicalityError(
            f"covariance spectrum [{lo:.6e}, {hi:.6e}] outside "
            f"[-{PHYSICALITY_TOL}, 1+{PHYSICALITY_TOL}]{when}"
        )


def _rk4_update(C, drift, drive, dt, k1=None):
    if k1 is None:
        k1 = covariance_derivative(C, drift, drive)
    k2 = covariance_derivative(C + (0.5 * dt) * k1, drift, drive)
    k3 = covariance_derivative(C + (0.5 * dt) * k2, drift, drive)
    k4 = covariance_derivative(C + dt * k3, drift, drive)
    acc = k2
    acc += k3
    acc *= 2.0
    acc += k1
    acc += k4
    acc *= dt / 6.0
    acc += C
    # re-Hermitize to keep floating-point asymmetry from accumulating
    out = acc + acc.conj().T
    out *= 0.5
    return out


def rk4_step(C, drift, drive, dt, check: bool = True) -> np.ndarray:
    """One classical RK4 step of the covariance equation of motion.

    With ``check`` the output spectrum is verified to stay in [0, 1] within
    tolerance, aborting with a diagnostic otherwise.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = _rk4_update(np.asarray(C, dtype=complex), drift, drive, dt)
    if check:
        _assert_physical(np.linalg.eigvalsh(out))
    return out


@dataclass
class Trajectory:
    """Uniformly sampled covariance trajectory (small models only: every
    snapshot and its time derivative is kept in memory)."""

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray


def evolve(model: ExtendedModel, C0=None, dt: float = 0.01, t_max: float = 10.0):
    """RK4 trajectory from C0 (default: uncorrelated half-filled chain)."""
    drift = drift_matrix(model)
    drive = drive_matrix(model)
    C = initial_covariance(model) if C0 is None else np.asarray(C0, dtype=complex)
    steps = int(round(t_max / dt))
    times = np.arange(steps + 1) * dt
    states = np.empty((steps + 1, model.dim, model.dim), dtype=complex)
    derivs = np.empty_like(states)
    # single-threaded BLAS: alternating small numpy/scipy kernels thrash the
    # two thread pools and run an order of magnitude slower otherwise
    with threadpool_limits(limits=1, user_api="blas"):
        for n in range(steps + 1):
            k1 = covariance_derivative(C, drift, drive)
            _assert_physical(np.linalg.eigvalsh(C), when=f" at t={times[n]:.4f}")
            states[n] = C
            derivs[n] = k1
            if n < steps:
                C = _rk4_update(C, drift, drive, dt, k1=k1)
    return Trajectory(times=times, states=states, derivatives=derivs)


def steady_state(drift, drive=None) -> np.ndarray:
    """Stationary covariance solving W C + C W^dag = F.

    Accepts either an assembled model or the pair (W, F).  Uses the complex
    Schur (Bartels-Stewart) reduction, verifies the residual against a
    relative tolerance of 1e-12, and checks that every drift eigenvalue has
    positive real part (otherwise the stationary state is not unique).
    """
    if drive is None:
        model = drift
        drift = drift_matrix(model)
        drive = drive_matrix(model)
    drift = np.asarray(drift, dtype=complex)
    drive = np.asarray(drive, dtype=complex)

    decay = np.linalg.eigvals(drift).real
    if decay.min() < MIN_DECAY:
        raise SteadyStateError(
            f"drift eigenvalue with real part {decay.min():.3e}: "
            "steady state is not unique (undamped mode)"
        )
    C = scipy.linalg.solve_sylvester(drift, drift.conj().T, drive)
    C = 0.5 * (C + C.conj().T)

    residual = np.abs(drift @ C + C @ drift.conj().T - drive).max()
    scale = max(np.abs(drive).max(), np.abs(drift).max() * np.abs(C).max())
    if residual > 1e-12 * scale:
        raise SteadyStateError(
            f"Sylvester residual {residual:.3e} exceeds {1e-12 * scale:.3e}"
        )
    _assert_physical(np.linalg.eigvalsh(C), when=" in steady state")
    return C
