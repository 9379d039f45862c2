"""Dense Fock-space reference implementations for small mode numbers.

Everything here scales exponentially in the number of modes and exists only
to cross-validate the covariance-matrix code paths: Gaussian states are built
explicitly on the 2^D-dimensional Fock space (Jordan-Wigner representation),
and the full master equation is integrated as a dense superoperator.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.special import xlogy

from .gaussian import hermitian_eigh
from .model import ExtendedModel

__all__ = [
    "MAX_STATE_MODES",
    "MAX_LINDBLAD_MODES",
    "lowering_operators",
    "quadratic_operator",
    "density_from_covariance",
    "reduced_density_from_covariance",
    "covariance_from_density",
    "partial_trace",
    "density_entropy",
    "density_relative_entropy",
    "trace_sqrt_product",
    "superoperator",
    "model_jump_operators",
    "model_superoperator",
    "dissipator_action",
    "lindblad_trajectory",
]

MAX_STATE_MODES = 6
MAX_LINDBLAD_MODES = 5

_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|
_PARITY = np.array([[1.0, 0.0], [0.0, -1.0]])
_EYE2 = np.eye(2)


def _check_modes(n_modes: int, limit: int):
    if n_modes > limit:
        raise ValueError(f"{n_modes} modes exceed the dense-oracle limit of {limit}")


def lowering_operators(n_modes: int) -> list:
    """Jordan-Wigner lowering operators a_i on the 2^n Fock space.

    Mode 0 is the leftmost tensor factor; the parity string precedes the
    local |0><1| so the canonical anticommutation relations hold exactly.
    """
    _check_modes(n_modes, MAX_STATE_MODES)
    ops = []
    for i in range(n_modes):
        op = np.array([[1.0]])
        for j in range(n_modes):
            if j < i:
                factor = _PARITY
            elif j == i:
                factor = _LOWER
            else:
                factor = _EYE2
            op = np.kron(op, factor)
        ops.append(op)
    return ops


def quadratic_operator(coeff: np.ndarray, ops: list) -> np.ndarray:
    """Dense matrix of sum_ij coeff[i, j] a_i^dag a_j."""
    coeff = np.asarray(coeff)
    dim = ops[0].shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(coeff.shape[0]):
        for j in range(coeff.shape[1]):
            c = coeff[i, j]
            if c != 0:
                out += c * (ops[i].conj().T @ ops[j])
    return out


def density_from_covariance(C: np.ndarray) -> np.ndarray:
    """Dense density matrix of the Gaussian state with covariance C.

    Built as a product over normal modes, rho = prod_m [(1 - lam_m) +
    (2 lam_m - 1) b_m^dag b_m], which is exact for occupations at 0 or 1 and
    never exponentiates a large matrix.
    """
    C = np.asarray(C)
    n = C.shape[0]
    _check_modes(n, MAX_STATE_MODES)
    w, U = hermitian_eigh(C)
    lam = np.clip(w, 0.0, 1.0)
    ops = lowering_operators(n)
    dim = 2**n
    rho = np.eye(dim, dtype=complex)
    for m in range(n):
        b = sum(U[i, m].conjugate() * ops[i] for i in range(n))
        number = b.conj().T @ b
        rho = rho @ ((1.0 - lam[m]) * np.eye(dim) + (2.0 * lam[m] - 1.0) * number)
    return 0.5 * (rho + rho.conj().T)


def covariance_from_density(rho: np.ndarray, ops: list | None = None) -> np.ndarray:
    """Covariance matrix C[i, j] = Tr[rho a_j^dag a_i] of a Fock-space state."""
    rho = np.asarray(rho)
    n = int(round(np.log2(rho.shape[0])))
    if ops is None:
        ops = lowering_operators(n)
    C = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            C[i, j] = np.trace(rho @ ops[j].conj().T @ ops[i])
    return C


def partial_trace(rho: np.ndarray, n_modes: int, keep) -> np.ndarray:
    """Qubit partial trace keeping the given tensor factors.

    Faithful as a fermionic partial trace only when the kept modes form a
    leading block (Jordan-Wigner strings then stay inside the block); use
    :func:`reduced_density_from_covariance` for arbitrary mode subsets.
    """
    keep = list(keep)
    traced = [i for i in range(n_modes) if i not in keep]
    t = rho.reshape((2,) * (2 * n_modes))
    order = keep + traced
    t = t.transpose(order + [n_modes + p for p in order])
    dk = 2 ** len(keep)
    dt = 2 ** len(traced)
    return np.einsum("abcb->ac", t.reshape(dk, dt, dk, dt))


def reduced_density_from_covariance(C: np.ndarray, keep) -> np.ndarray:
    """Fermionic reduced density matrix of a Gaussian state on a mode subset.

    The modes are reordered so the kept ones lead before building the dense
    state, which confines the Jordan-Wigner strings of all kept-mode
    operators to the kept block and makes the qubit trace exact.
    """
    keep = list(keep)
    C = np.asarray(C)
    n = C.shape[0]
    rest = [i for i in range(n) if i not in keep]
    order = keep + rest
    rho = density_from_covariance(C[np.ix_(order, order)])
    return partial_trace(rho, n, range(len(keep)))


def density_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy -Tr[rho log rho] in nats."""
    w = np.linalg.eigvalsh(rho)
    w = np.clip(w, 0.0, None)
    return float(-xlogy(w, w).sum())


def _logm_psd(rho: np.ndarray, floor: float = 1e-300) -> np.ndarray:
    w, U = hermitian_eigh(rho)
    w = np.clip(w, floor, None)
    return (U * np.log(w)) @ U.conj().T


def density_relative_entropy(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Relative entropy Tr[rho1 (log rho1 - log rho2)] by dense matrix logs."""
    val = np.trace(rho1 @ (_logm_psd(rho1) - _logm_psd(rho2)))
    return float(val.real)


def trace_sqrt_product(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Tr sqrt(rho1 rho2) from the eigenvalues of the product.

    The product of two positive states is similar to a positive matrix, so
    its eigenvalues are real and non-negative.
    """
    w = np.linalg.eigvals(rho1 @ rho2)
    if np.abs(w.imag).max(initial=0.0) > 1e-8:
        raise ArithmeticError("product spectrum is not numerically real")
    return float(np.sqrt(np.clip(w.real, 0.0, None)).sum())


def superoperator(hamiltonian: np.ndarray, jumps) -> np.ndarray:
    """Dense GKLS generator acting on row-major vectorised density matrices.

    d rho/dt = -i[H, rho] + sum_J (J rho J^dag - {J^dag J, rho}/2).
    """
    H = np.asarray(hamiltonian, dtype=complex)
    dim = H.shape[0]
    eye = np.eye(dim)
    gen = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for J in jumps:
        JdJ = J.conj().T @ J
        gen += (
            np.kron(J, J.conj())
            - 0.5 * np.kron(JdJ, eye)
            - 0.5 * np.kron(eye, JdJ.T)
        )
    return gen


def model_jump_operators(model: ExtendedModel, lead: int | None = None, ops=None):
    """Jump operators sqrt(gamma(1-f)) a_k and sqrt(gamma f) a_k^dag.

    Restricted to one lead when ``lead`` is given, else all leads.
    """
    _check_modes(model.dim, MAX_LINDBLAD_MODES)
    if ops is None:
        ops = lowering_operators(model.dim)
    which = range(model.num_leads) if lead is None else [lead]
    jumps = []
    for a in which:
        disc = model.discretizations[a]
        for k, q in enumerate(model.lead_indices[a]):
            rate_out = disc.dampings[k] * (1.0 - disc.occupations[k])
            rate_in = disc.dampings[k] * disc.occupations[k]
            if rate_out > 0:
                jumps.append(np.sqrt(rate_out) * ops[q])
            if rate_in > 0:
                jumps.append(np.sqrt(rate_in) * ops[q].conj().T)
    return jumps


def model_superoperator(model: ExtendedModel) -> np.ndarray:
    """Full GKLS generator of an extended model on the 4^D operator space."""
    ops = lowering_operators(model.dim)
    H = quadratic_operator(model.hamiltonian, ops)
    return superoperator(H, model_jump_operators(model, ops=ops))


def dissipator_action(model: ExtendedModel, rho: np.ndarray, lead: int | None = None):
    """Apply the dissipative part (of one lead, or all) to a Fock-space state."""
    ops = lowering_operators(model.dim)
    out = np.zeros_like(rho, dtype=complex)
    for J in model_jump_operators(model, lead=lead, ops=ops):
        JdJ = J.conj().T @ J
        out += J @ rho @ J.conj().T - 0.5 * (JdJ @ rho + rho @ JdJ)
    return out


def lindblad_trajectory(model: ExtendedModel, C0: np.ndarray, dt: float, t_max: float):
    """Integrate the dense master equation from a Gaussian initial state.

    Steps with the exact propagator expm(L dt); returns the sample times,
    the covariance matrix at each sample, and the density matrices.
    """
    _check_modes(model.dim, MAX_LINDBLAD_MODES)
    rho = density_from_covariance(C0)
    gen = model_superoperator(model)
    prop = scipy.linalg.expm(gen * dt)
    steps = int(round(t_max / dt))
    ops = lowering_operators(model.dim)
    times = np.arange(steps + 1) * dt
    rhos = [rho]
    covs = [covariance_from_density(rho, ops)]
    vec = rho.reshape(-1)
    dim = rho.shape[0]
    for _ in range(steps):
        vec = prop @ vec
        rho = vec.reshape(dim, dim)
        rhos.append(rho)
        covs.append(covariance_from_density(rho, ops))
    return times, np.array(covs), rhos
