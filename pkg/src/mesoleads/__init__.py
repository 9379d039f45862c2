"""Covariance-matrix simulator for fermionic chains coupled to discretised,
damped mesoscopic leads, with full entropy-production accounting."""

from .model import (
    SystemSpec,
    LeadSpec,
    LeadDiscretization,
    ExtendedModel,
    fermi_occupation,
    discretize_lead,
    assemble_extended_model,
)
from .gaussian import (
    GaussianForm,
    gaussian_form,
    covariance_from_form,
    von_neumann_entropy,
    relative_entropy,
    fidelity,
    log_fidelity,
    thermal_covariance,
    reduce_to_block,
)
from .dynamics import (
    PhysicalityError,
    SteadyStateError,
    drift_matrix,
    drive_matrix,
    initial_covariance,
    covariance_derivative,
    rk4_step,
    Trajectory,
    evolve,
    steady_state,
)
from .thermo import (
    ThermoRecord,
    lead_dissipative_flow,
    dissipative_flow,
    external_currents,
    internal_currents,
    entropy_rates,
    per_lead_spohn_terms,
    run_thermo_trajectory,
    single_bath_budget,
    multi_bath_budget,
    integrated_current_residuals,
)

__version__ = "0.1.0"
