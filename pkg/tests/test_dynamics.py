import numpy as np
import pytest

from conftest import random_covariance
from mesoleads import fock
from mesoleads.dynamics import (
    PhysicalityError,
    SteadyStateError,
    covariance_derivative,
    drift_matrix,
    drive_matrix,
    evolve,
    initial_covariance,
    rk4_step,
    steady_state,
)
from mesoleads.gaussian import thermal_covariance, von_neumann_entropy
from mesoleads.model import (
    LeadSpec,
    SystemSpec,
    assemble_extended_model,
    discretize_lead,
)


def silent_lead(lead):
    """Discretization with the site coupling switched off."""
    disc = discretize_lead(lead)
    return type(disc)(disc.energies, 0 * disc.couplings, disc.dampings, disc.occupations)


def test_initial_covariance_blocks():
    model = assemble_extended_model(
        SystemSpec(2, 0.0, 1.0), [LeadSpec(3, 2.0, 0.5, 0.7)]
    )
    C = initial_covariance(model, [0.25, 0.75])
    assert np.allclose(np.diag(C)[:2].real, [0.25, 0.75])
    assert np.allclose(np.diag(C)[2:].real, model.discretizations[0].occupations)
    off = C - np.diag(np.diag(C))
    assert np.abs(off).max() == 0.0
    # uncorrelated start: mutual information vanishes
    s_sys = von_neumann_entropy(C[:2, :2])
    s_lead = von_neumann_entropy(C[2:, 2:])
    assert abs(von_neumann_entropy(C) - s_sys - s_lead) < 1e-12


def test_initial_covariance_rejects_bad_occupation():
    model = assemble_extended_model(SystemSpec(1, 0.0, 0.0), [LeadSpec(2, 1.0, 0.5, 1.0)])
    with pytest.raises(ValueError):
        initial_covariance(model, 1.5)


def test_decoupled_mode_matches_closed_form():
    lead = LeadSpec(1, 1.0, 0.5, 0.8)
    model = assemble_extended_model(SystemSpec(1, 0.3, 0.0), [lead], [silent_lead(lead)])
    disc = model.discretizations[0]
    gamma, f = disc.dampings[0], disc.occupations[0]
    drift, drive = drift_matrix(model), drive_matrix(model)
    c0 = 0.1
    C = np.diag([0.5, c0]).astype(complex)
    dt, steps = 0.02, 200
    for _ in range(steps):
        C = rk4_step(C, drift, drive, dt)
    exact = f + (c0 - f) * np.exp(-gamma * dt * steps)
    assert abs(C[1, 1].real - exact) < 1e-10


def test_rk4_fourth_order_convergence():
    lead = LeadSpec(1, 1.0, 0.5, 0.8)
    model = assemble_extended_model(SystemSpec(1, 0.3, 0.0), [lead], [silent_lead(lead)])
    disc = model.discretizations[0]
    gamma, f = disc.dampings[0], disc.occupations[0]
    drift, drive = drift_matrix(model), drive_matrix(model)

    def err(dt, steps):
        C = np.diag([0.5, 0.1]).astype(complex)
        for _ in range(steps):
            C = rk4_step(C, drift, drive, dt, check=False)
        exact = f + (0.1 - f) * np.exp(-gamma * dt * steps)
        return abs(C[1, 1].real - exact)

    ratio = err(0.2, 10) / err(0.1, 20)
    assert 10 < ratio < 22


def test_unitary_evolution_isospectral(rng):
    model = assemble_extended_model(SystemSpec(3, (0.2, -0.1, 0.4), 0.6), [LeadSpec(2, 1.0, 0.5, 1.0)])
    drift = 1j * model.hamiltonian  # damping switched off
    drive = np.zeros((model.dim, model.dim), dtype=complex)
    C = random_covariance(rng, model.dim)
    before = np.sort(np.linalg.eigvalsh(C))
    for _ in range(50):
        C = rk4_step(C, drift, drive, 0.01)
    after = np.sort(np.linalg.eigvalsh(C))
    assert np.abs(before - after).max() < 1e-9


def test_step_is_linear(rng):
    model = assemble_extended_model(SystemSpec(1, 0.5, 0.0), [LeadSpec(3, 2.0, 0.8, 0.5)])
    drift, drive = drift_matrix(model), drive_matrix(model)
    a = random_covariance(rng, model.dim)
    b = random_covariance(rng, model.dim)
    lam = 0.3
    mixed = rk4_step(lam * a + (1 - lam) * b, drift, drive, 0.05)
    combo = lam * rk4_step(a, drift, drive, 0.05) + (1 - lam) * rk4_step(b, drift, drive, 0.05)
    assert np.abs(mixed - combo).max() < 1e-13


def test_step_aborts_on_unphysical_spectrum():
    drift = np.zeros((2, 2), dtype=complex)
    drive = np.zeros((2, 2), dtype=complex)
    with pytest.raises(PhysicalityError):
        rk4_step(np.diag([2.0, 0.5]).astype(complex), drift, drive, 0.01)


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        rk4_step(np.eye(2, dtype=complex) / 2, np.zeros((2, 2)), np.zeros((2, 2)), 0.0)


def test_steady_state_lead_only_is_thermal():
    # damped modes with no coupling: detailed balance per mode
    disc = discretize_lead(LeadSpec(4, 3.0, 0.5, 0.9))
    drift = np.diag(1j * disc.energies + disc.dampings / 2)
    drive = np.diag(disc.dampings * disc.occupations).astype(complex)
    C = steady_state(drift, drive)
    assert np.abs(np.diag(C).real - disc.occupations).max() < 1e-12
    assert np.abs(C - np.diag(np.diag(C))).max() < 1e-12


def test_steady_state_is_fixed_point():
    model = assemble_extended_model(SystemSpec(1, 1.0, 1.0), [LeadSpec(20, 10.0, 1.0, 1.0)])
    drift, drive = drift_matrix(model), drive_matrix(model)
    C = steady_state(drift, drive)
    rate = covariance_derivative(C, drift, drive)
    assert np.abs(rate).max() < 1e-12


def test_steady_state_residual_bound():
    for sites, modes in ((1, 40), (3, 25), (1, 200)):
        model = assemble_extended_model(
            SystemSpec(sites, 1.0, 1.0), [LeadSpec(modes, 10.0, 1.0, 0.5)]
        )
        drift, drive = drift_matrix(model), drive_matrix(model)
        C = steady_state(drift, drive)
        residual = np.abs(drift @ C + C @ drift.conj().T - drive).max()
        scale = max(np.abs(drive).max(), np.abs(drift).max() * np.abs(C).max())
        assert residual <= 1e-12 * scale
        w = np.linalg.eigvalsh(C)
        assert w.min() > -1e-8 and w.max() < 1 + 1e-8


def test_steady_state_detects_undamped_mode():
    # disconnected, undamped second site: no unique stationary state
    model = assemble_extended_model(
        SystemSpec(2, 0.5, 0.0), [LeadSpec(4, 2.0, 0.7, 1.0)]
    )
    with pytest.raises(SteadyStateError):
        steady_state(model)


def test_trajectory_matches_dense_master_equation():
    model = assemble_extended_model(SystemSpec(1, 0.5, 0.0), [LeadSpec(2, 1.0, 0.4, 1.0)])
    C0 = initial_covariance(model, 0.25)
    times, covs, _ = fock.lindblad_trajectory(model, C0, dt=0.1, t_max=2.0)
    traj = evolve(model, C0, dt=0.01, t_max=2.0)
    dev = max(np.abs(traj.states[10 * k] - covs[k]).max() for k in range(len(times)))
    assert dev < 1e-8


def test_flipped_dissipator_is_detected():
    # mutation sanity: negating the dissipative part must break the match
    model = assemble_extended_model(SystemSpec(1, 0.5, 0.0), [LeadSpec(2, 1.0, 0.4, 1.0)])
    ops = fock.lowering_operators(model.dim)
    H = fock.quadratic_operator(model.hamiltonian, ops)
    full = fock.superoperator(H, fock.model_jump_operators(model, ops=ops))
    unitary = fock.superoperator(H, [])
    flipped = 2 * unitary - full
    C0 = initial_covariance(model, 0.25)
    rho = fock.density_from_covariance(C0).reshape(-1)
    import scipy.linalg

    prop = scipy.linalg.expm(flipped * 0.5)
    for _ in range(4):
        rho = prop @ rho
    bad_cov = fock.covariance_from_density(rho.reshape(2**model.dim, 2**model.dim))
    traj = evolve(model, C0, dt=0.01, t_max=2.0)
    assert np.abs(traj.states[-1] - bad_cov).max() > 1e-3


def test_trajectory_contracts_to_steady_state():
    model = assemble_extended_model(SystemSpec(1, 1.0, 1.0), [LeadSpec(8, 4.0, 0.8, 1.0)])
    drift, drive = drift_matrix(model), drive_matrix(model)
    C_ss = steady_state(drift, drive)
    traj = evolve(model, dt=0.02, t_max=12.0)
    dist = np.abs(traj.states - C_ss).reshape(len(traj.times), -1).max(axis=1)
    slowest = 1.0 / np.linalg.eigvals(drift).real.min()
    tail = dist[traj.times > slowest]
    assert np.all(np.diff(tail) < 1e-12)
    assert tail[-1] < 1e-2 * dist[0]


def test_trace_bounds_along_trajectory():
    model = assemble_extended_model(SystemSpec(2, 1.0, 0.7), [LeadSpec(6, 3.0, 0.9, 0.6)])
    traj = evolve(model, dt=0.02, t_max=4.0)
    traces = np.einsum("tii->t", traj.states).real
    assert traces.min() > -1e-8
    assert traces.max() < model.dim + 1e-8


def test_evolve_records_derivatives():
    model = assemble_extended_model(SystemSpec(1, 0.5, 0.0), [LeadSpec(3, 2.0, 0.6, 0.8)])
    drift, drive = drift_matrix(model), drive_matrix(model)
    traj = evolve(model, dt=0.05, t_max=1.0)
    k = 7
    expected = covariance_derivative(traj.states[k], drift, drive)
    assert np.abs(traj.derivatives[k] - expected).max() < 1e-14
    assert traj.times[0] == 0.0
    assert np.allclose(np.diff(traj.times), 0.05)
