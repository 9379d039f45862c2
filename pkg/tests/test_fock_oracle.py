import numpy as np
import pytest

from conftest import commuting_pair, random_covariance
from mesoleads import fock
from mesoleads.gaussian import (
    fidelity,
    reduce_to_block,
    relative_entropy,
    von_neumann_entropy,
)
from mesoleads.model import LeadSpec, SystemSpec, assemble_extended_model


def test_canonical_anticommutation():
    n = 3
    ops = fock.lowering_operators(n)
    eye = np.eye(2**n)
    for i in range(n):
        for j in range(n):
            anti = ops[i] @ ops[j].conj().T + ops[j].conj().T @ ops[i]
            target = eye if i == j else 0 * eye
            assert np.abs(anti - target).max() < 1e-14
            assert np.abs(ops[i] @ ops[j] + ops[j] @ ops[i]).max() < 1e-14


def test_mode_limit_enforced():
    with pytest.raises(ValueError):
        fock.lowering_operators(fock.MAX_STATE_MODES + 1)


def test_single_mode_density():
    rho = fock.density_from_covariance(np.diag([0.3]))
    assert np.allclose(rho, np.diag([0.7, 0.3]))


def test_density_trace_one_and_posdef(rng):
    for dim in (2, 3, 4):
        rho = fock.density_from_covariance(random_covariance(rng, dim))
        assert abs(np.trace(rho).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-13


def test_pure_occupations_exact():
    rho = fock.density_from_covariance(np.diag([0.0, 1.0]))
    C = fock.covariance_from_density(rho)
    assert np.abs(C - np.diag([0.0, 1.0])).max() < 1e-14


def test_occupations_round_trip(rng):
    C = random_covariance(rng, 3)
    rho = fock.density_from_covariance(C)
    assert np.abs(fock.covariance_from_density(rho) - C).max() < 1e-12


def test_entropy_matches_dense(rng):
    for dim in (2, 4, 5):
        C = random_covariance(rng, dim)
        dense = fock.density_entropy(fock.density_from_covariance(C))
        assert abs(von_neumann_entropy(C) - dense) < 1e-10


def test_relative_entropy_matches_dense(rng):
    for _ in range(5):
        a = random_covariance(rng, 4)
        b = random_covariance(rng, 4)
        dense = fock.density_relative_entropy(
            fock.density_from_covariance(a), fock.density_from_covariance(b)
        )
        assert abs(relative_entropy(a, b) - dense) < 1e-10


def test_fidelity_matches_dense_on_commuting(rng):
    for _ in range(5):
        a, b = commuting_pair(rng, 4)
        dense = fock.trace_sqrt_product(
            fock.density_from_covariance(a), fock.density_from_covariance(b)
        )
        assert abs(fidelity(a, b) - dense) < 1e-10


def test_block_reduction_matches_partial_trace(rng):
    C = random_covariance(rng, 4)
    for keep in ([0, 1], [0, 2], [1, 3], [2]):
        reduced = fock.reduced_density_from_covariance(C, keep)
        assert abs(np.trace(reduced).real - 1.0) < 1e-12
        dense_entropy = fock.density_entropy(reduced)
        assert abs(von_neumann_entropy(reduce_to_block(C, keep)) - dense_entropy) < 1e-10
        occ = fock.covariance_from_density(reduced)
        assert np.abs(occ - reduce_to_block(C, keep)).max() < 1e-12


def _small_model(modes=2, temperature=1.0, coupling=0.4):
    return assemble_extended_model(
        SystemSpec(1, 0.5, 0.0),
        [LeadSpec(modes, 1.0, coupling, temperature)],
    )


def test_lindblad_trace_preserved():
    model = _small_model()
    C0 = np.diag([0.2, 0.9, 0.1]).astype(complex)
    _, _, rhos = fock.lindblad_trajectory(model, C0, dt=0.25, t_max=2.0)
    for rho in rhos:
        assert abs(np.trace(rho).real - 1.0) < 1e-10


def test_lindblad_decoupled_mode_relaxes_to_thermal():
    lead = LeadSpec(2, 1.0, 0.4, 0.8)
    from mesoleads.model import discretize_lead

    disc = discretize_lead(lead)
    silent = type(disc)(disc.energies, 0 * disc.couplings, disc.dampings, disc.occupations)
    model = assemble_extended_model(SystemSpec(1, 0.5, 0.0), [lead], [silent])
    C0 = np.diag([0.5, 0.05, 0.95]).astype(complex)
    _, covs, _ = fock.lindblad_trajectory(model, C0, dt=0.5, t_max=30.0)
    assert np.abs(np.diag(covs[-1])[1:] - disc.occupations).max() < 1e-8


def test_dissipator_action_traceless(rng):
    model = _small_model()
    rho = fock.density_from_covariance(random_covariance(rng, 3))
    flow = fock.dissipator_action(model, rho)
    assert abs(np.trace(flow)) < 1e-12


def test_quadratic_operator_number():
    ops = fock.lowering_operators(2)
    N = fock.quadratic_operator(np.eye(2), ops)
    # eigenvalues are total occupation numbers 0, 1, 1, 2
    assert sorted(np.linalg.eigvalsh(N).round(12).tolist()) == [0.0, 1.0, 1.0, 2.0]
