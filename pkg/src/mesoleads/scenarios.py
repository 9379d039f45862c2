"""Scenario runners: parameter resolution, sweeps, CSV and manifest output.

Each scenario resolves its parameters from built-in defaults, an optional
JSON config document, and command-line overrides (in that order), runs
deterministically, and emits one CSV plus a manifest recording every
resolved parameter.  Floats are written with 17 significant digits so
identical configurations reproduce byte-identical files.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fock
from .dynamics import (
    PhysicalityError,
    SteadyStateError,
    drift_matrix,
    drive_matrix,
    evolve,
    initial_covariance,
    steady_state,
)
from .gaussian import (
    gaussian_form,
    covariance_from_form,
    log_fidelity,
    relative_entropy,
    thermal_covariance,
    von_neumann_entropy,
    reduce_to_block,
)
from .model import LeadSpec, SystemSpec, assemble_extended_model
from .thermo import (
    ThermoRecord,
    external_currents,
    integrated_current_residuals,
    internal_currents,
    run_thermo_trajectory,
)

__all__ = [
    "ConfigError",
    "SimulationError",
    "SCENARIOS",
    "resolve_params",
    "run_scenario",
    "run_oracle_check",
]


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


class SimulationError(RuntimeError):
    """A numerical result unfit for emission (non-finite value)."""


_LEAD_DEFAULT = {
    "modes": 100,
    "half_bandwidth": 10.0,
    "coupling": 1.0,
    "temperature": 1.0,
    "chemical_potential": 0.0,
    "attach_site": 1,
}

DEFAULTS = {
    "thermalization-sweep": {
        "sites_grid": [1, 2, 3, 4],
        "modes_grid": [16, 32, 64, 128, 256],
        "temperature_grid": [0.5, 1.0, 5.0],
        "onsite": 1.0,
        "hopping": 1.0,
        "half_bandwidth": 10.0,
        "coupling": 1.0,
        "chemical_potential": 0.0,
        "threads": 1,
    },
    "entropy-rates": {
        "temperature_grid": [0.1, 1.0],
        "modes_grid": [5, 100],
        "sites": 1,
        "onsite": 1.0,
        "hopping": 1.0,
        "half_bandwidth": 10.0,
        "coupling": 1.0,
        "chemical_potential": 0.0,
        "initial_occupation": 0.5,
        "dt": 0.01,
        "t_max": 40.0,
    },
    "budget-single": {
        "sites": 1,
        "onsite": 1.0,
        "hopping": 1.0,
        "leads": [dict(_LEAD_DEFAULT)],
        "initial_occupation": 0.5,
        "dt": 0.01,
        "t_max": 20.0,
    },
    "budget-multi": {
        "sites": 1,
        "onsite": 1.0,
        "hopping": 1.0,
        "leads": [
            dict(_LEAD_DEFAULT, temperature=0.5),
            dict(_LEAD_DEFAULT, temperature=1.0),
        ],
        "initial_occupation": 0.5,
        "dt": 0.01,
        "t_max": 44.0,
    },
    "oracle-check": {},
}

SCENARIOS = tuple(DEFAULTS)

_RATE_COLUMNS = [
    "S_S",
    "S_SL",
    "sigma_int",
    "sigma_ext",
    "sigma_spohn",
    "Sigma_int",
    "Sigma_ext",
    "mutual_or_total_corr",
    "budget_lhs",
    "budget_rhs",
    "budget_residual",
]


def resolve_params(scenario: str, config_path=None, overrides=None) -> dict:
    """Merge defaults <- config file <- command-line overrides."""
    if scenario not in DEFAULTS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    params = json.loads(json.dumps(DEFAULTS[scenario]))  # deep copy
    if config_path is not None:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config document must be a JSON object")
        declared = loaded.pop("scenario", scenario)
        if declared != scenario:
            raise ConfigError(
                f"config declares scenario {declared!r}, expected {scenario!r}"
            )
        unknown = set(loaded) - set(params)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        params.update(loaded)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in params:
            raise ConfigError(f"{key!r} is not a parameter of {scenario}")
        params[key] = value
    _validate(scenario, params)
    return params


def _validate(scenario: str, params: dict):
    if scenario == "oracle-check":
        return
    if "dt" in params:
        if params["dt"] <= 0:
            raise ConfigError("dt must be positive")
        if params["t_max"] <= params["dt"]:
            raise ConfigError("t_max must exceed dt")
    for key in ("sites_grid", "modes_grid", "temperature_grid"):
        if key in params and not params[key]:
            raise ConfigError(f"{key} must be non-empty")
    if "leads" in params and not params["leads"]:
        raise ConfigError("at least one lead is required")
    if scenario == "budget-single" and len(params["leads"]) != 1:
        raise ConfigError("budget-single takes exactly one lead")
    if scenario == "budget-multi" and len(params["leads"]) < 2:
        raise ConfigError("budget-multi needs at least two leads")
    if scenario in ("entropy-rates",) and params["sites"] != 1:
        raise ConfigError("entropy-rates is defined for a single-site chain")


def _lead_from_dict(d: dict) -> tuple:
    try:
        spec = LeadSpec(
            modes=int(d["modes"]),
            half_bandwidth=float(d["half_bandwidth"]),
            coupling=float(d["coupling"]),
            temperature=float(d["temperature"]),
            chemical_potential=float(d.get("chemical_potential", 0.0)),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad lead specification {d}: {exc}") from exc
    return spec, int(d.get("attach_site", 1))


def _build_model(params: dict):
    leads, attach = zip(*(_lead_from_dict(d) for d in params["leads"]))
    try:
        system = SystemSpec(
            num_sites=int(params["sites"]),
            onsite=params["onsite"],
            hopping=float(params["hopping"]),
            attach_sites=attach,
        )
        return assemble_extended_model(system, leads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(value) -> str:
    x = float(value)
    if not np.isfinite(x):
        raise SimulationError("refusing to write a non-finite value")
    return f"{x:.17g}"


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(path: Path, scenario: str, params: dict, extra: dict):
    doc = {"scenario": scenario, "parameters": params}
    doc.update(extra)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _record_header(num_leads: int, prefix=()) -> list:
    header = list(prefix) + ["t"]
    for a in range(1, num_leads + 1):
        header += [
            f"I_E.{a}",
            f"I_P.{a}",
            f"I_Q.{a}",
            f"J_E.{a}",
            f"J_P.{a}",
            f"J_Q.{a}",
            f"S_L.{a}",
            f"dF_L.{a}",
        ]
    return header + _RATE_COLUMNS


def _record_rows(record: ThermoRecord, prefix=()):
    rows = []
    for i, t in enumerate(record.times):
        row = list(prefix) + [t]
        for a in range(record.num_leads):
            row += [
                record.external_energy[i, a],
                record.external_particle[i, a],
                record.external_heat[i, a],
                record.internal_energy[i, a],
                record.internal_particle[i, a],
                record.internal_heat[i, a],
                record.lead_entropy[i, a],
                record.free_energy_change[i, a],
            ]
        row += [
            record.system_entropy[i],
            record.total_entropy[i],
            record.sigma_int[i],
            record.sigma_ext[i],
            record.sigma_spohn[i],
            record.cumulative_int[i],
            record.cumulative_ext[i],
            record.correlation[i],
            record.budget_lhs[i],
            record.budget_rhs[i],
            record.budget_residual[i],
        ]
        rows.append(row)
    return rows


@dataclass
class RunResult:
    csv_path: Path
    manifest_path: Path
    failures: list


def _sweep_cell(params, sites, modes, temperature):
    lead = LeadSpec(
        modes=modes,
        half_bandwidth=params["half_bandwidth"],
        coupling=params["coupling"],
        temperature=temperature,
        chemical_potential=params["chemical_potential"],
    )
    system = SystemSpec(
        num_sites=sites,
        onsite=params["onsite"],
        hopping=params["hopping"],
        attach_sites=(1,),
    )
    model = assemble_extended_model(system, [lead])
    C_ss = steady_state(model)
    C_th = thermal_covariance(model, temperature, params["chemical_potential"])
    infidelity = -np.expm1(log_fidelity(C_ss, C_th))
    rel_ent = relative_entropy(C_ss, C_th)
    return [sites, modes, temperature, infidelity, rel_ent]


def run_thermalization_sweep(params: dict, out_dir: Path) -> RunResult:
    """Infidelity of the stationary state against the global thermal state,
    swept over chain size, lead modes and temperature."""
    cells = [
        (n, m, t)
        for n in params["sites_grid"]
        for m in params["modes_grid"]
        for t in params["temperature_grid"]
    ]
    results = {}
    failures = []

    def compute(cell):
        return cell, _sweep_cell(params, *cell)

    threads = int(params.get("threads", 1) or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = pool.map(_guarded(compute), cells)
    else:
        outcomes = map(_guarded(compute), cells)
    for cell, value, error in outcomes:
        if error is not None:
            failures.append(f"N={cell[0]} L={cell[1]} T={cell[2]}: {error}")
        else:
            results[cell] = value

    rows = [results[c] for c in sorted(results)]
    csv_path = out_dir / "thermalization_sweep.csv"
    _write_csv(csv_path, ["N", "L", "T", "infidelity", "rel_entropy"], rows)
    manifest = out_dir / "thermalization_sweep_manifest.txt"
    _write_manifest(manifest, "thermalization-sweep", params, {"failures": failures})
    return RunResult(csv_path, manifest, failures)


def _guarded(fn):
    def wrapped(cell):
        try:
            cell_out, value = fn(cell)
            return cell_out, value, None
        except (SteadyStateError, PhysicalityError, np.linalg.LinAlgError) as exc:
            return cell, None, str(exc)

    return wrapped


def run_entropy_rates(params: dict, out_dir: Path) -> RunResult:
    """Time series of the embedding and semigroup entropy-production rates
    for every (temperature, modes) cell of a single-lead resonant level."""
    rows = []
    for temperature in sorted(params["temperature_grid"]):
        for modes in sorted(params["modes_grid"]):
            cell = dict(params)
            cell["leads"] = [
                {
                    "modes": modes,
                    "half_bandwidth": params["half_bandwidth"],
                    "coupling": params["coupling"],
                    "temperature": temperature,
                    "chemical_potential": params["chemical_potential"],
                    "attach_site": 1,
                }
            ]
            model = _build_model(cell)
            C0 = initial_covariance(model, params["initial_occupation"])
            record = run_thermo_trajectory(
                model, C0, dt=params["dt"], t_max=params["t_max"]
            )
            rows += _record_rows(record, prefix=(temperature, modes))
    csv_path = out_dir / "entropy_rates.csv"
    _write_csv(csv_path, _record_header(1, prefix=("T", "L")), rows)
    manifest = out_dir / "entropy_rates_manifest.txt"
    _write_manifest(manifest, "entropy-rates", params, _notes())
    return RunResult(csv_path, manifest, [])


def _run_budget(scenario: str, params: dict, out_dir: Path) -> RunResult:
    model = _build_model(params)
    C0 = initial_covariance(model, params["initial_occupation"])
    record = run_thermo_trajectory(model, C0, dt=params["dt"], t_max=params["t_max"])
    name = scenario.replace("-", "_")
    csv_path = out_dir / f"{name}.csv"
    _write_csv(csv_path, _record_header(model.num_leads), _record_rows(record))
    manifest = out_dir / f"{name}_manifest.txt"
    _write_manifest(manifest, scenario, params, _notes())
    return RunResult(csv_path, manifest, [])


def run_budget_single(params: dict, out_dir: Path) -> RunResult:
    """Single-bath cumulative entropy budget time series."""
    return _run_budget("budget-single", params, out_dir)


def run_budget_multi(params: dict, out_dir: Path) -> RunResult:
    """Multi-bath cumulative entropy budget time series."""
    return _run_budget("budget-multi", params, out_dir)


def _notes() -> dict:
    return {
        "notes": {
            "units": "energies in the global unit, times in its inverse, entropies in nats",
            "dF_L": "beta_a * (dE_a - mu_a * dN_a) - dS_a  (nats)",
            "sign convention": "currents positive into the extended/central system",
        }
    }


# ---------------------------------------------------------------------------
# oracle-check


def _random_covariance(rng, dim, lo=0.05, hi=0.95):
    phases = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    U, _ = np.linalg.qr(phases)
    occ = rng.uniform(lo, hi, size=dim)
    return (U * occ) @ U.conj().T


def _oracle_model(modes=2, half_bandwidth=1.0, coupling=0.4, temperature=1.0):
    system = SystemSpec(num_sites=1, onsite=0.5, hopping=0.0, attach_sites=(1,))
    lead = LeadSpec(
        modes=modes,
        half_bandwidth=half_bandwidth,
        coupling=coupling,
        temperature=temperature,
    )
    return assemble_extended_model(system, [lead])


def _check_state_roundtrip(rng):
    C = _random_covariance(rng, 3)
    rho = fock.density_from_covariance(C)
    return np.abs(fock.covariance_from_density(rho) - C).max()


def _check_form_roundtrip(rng):
    C = _random_covariance(rng, 4)
    return np.abs(covariance_from_form(gaussian_form(C)) - C).max()


def _check_entropy(rng):
    C = _random_covariance(rng, 4)
    return abs(von_neumann_entropy(C) - fock.density_entropy(fock.density_from_covariance(C)))


def _check_relative_entropy(rng):
    C1 = _random_covariance(rng, 4)
    C2 = _random_covariance(rng, 4)
    dense = fock.density_relative_entropy(
        fock.density_from_covariance(C1), fock.density_from_covariance(C2)
    )
    return abs(relative_entropy(C1, C2) - dense)


def _check_fidelity(rng):
    phases = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    U, _ = np.linalg.qr(phases)
    occ1 = rng.uniform(0.1, 0.9, size=4)
    occ2 = rng.uniform(0.1, 0.9, size=4)
    C1 = (U * occ1) @ U.conj().T
    C2 = (U * occ2) @ U.conj().T
    dense = fock.trace_sqrt_product(
        fock.density_from_covariance(C1), fock.density_from_covariance(C2)
    )
    return abs(np.exp(log_fidelity(C1, C2)) - dense)


def _check_reduction(rng):
    C = _random_covariance(rng, 4)
    keep = [0, 2]
    dense = fock.density_entropy(fock.reduced_density_from_covariance(C, keep))
    return abs(von_neumann_entropy(reduce_to_block(C, keep)) - dense)


def _check_lindblad(_rng):
    model = _oracle_model(modes=2)
    C0 = initial_covariance(model, 0.25)
    times, covs, _ = fock.lindblad_trajectory(model, C0, dt=0.05, t_max=5.0)
    traj = evolve(model, C0, dt=0.01, t_max=5.0)
    stride = 5  # 0.05 / 0.01
    return max(
        np.abs(traj.states[stride * k] - covs[k]).max() for k in range(len(times))
    )


def _transient_state(model, t=1.5):
    C0 = initial_covariance(model, 0.1)
    _, covs, rhos = fock.lindblad_trajectory(model, C0, dt=t, t_max=t)
    return covs[-1], rhos[-1]


def _check_external_currents(_rng):
    model = _oracle_model(modes=2)
    C, rho = _transient_state(model)
    i_e, i_p = external_currents(model, C)
    ops = fock.lowering_operators(model.dim)
    H = fock.quadratic_operator(model.hamiltonian, ops)
    N = fock.quadratic_operator(np.eye(model.dim), ops)
    flow = fock.dissipator_action(model, rho, lead=0)
    return max(
        abs(i_e[0] - np.trace(H @ flow).real), abs(i_p[0] - np.trace(N @ flow).real)
    )


def _check_internal_currents(_rng):
    model = _oracle_model(modes=2)
    C, rho = _transient_state(model)
    j_e, j_p = internal_currents(model, C)
    ops = fock.lowering_operators(model.dim)
    idx = model.lead_indices[0]
    s = model.system_indices
    proj = np.zeros((model.dim, model.dim))
    proj[idx, idx] = 1.0
    h_lead = np.zeros((model.dim, model.dim))
    h_lead[idx, idx] = model.hamiltonian[idx, idx]
    h_cpl = np.zeros((model.dim, model.dim))
    h_cpl[np.ix_(idx, s)] = model.hamiltonian[np.ix_(idx, s)]
    h_cpl[np.ix_(s, idx)] = model.hamiltonian[np.ix_(s, idx)]
    N_L = fock.quadratic_operator(proj, ops)
    H_L = fock.quadratic_operator(h_lead, ops)
    H_SL = fock.quadratic_operator(h_cpl, ops)
    flow = fock.dissipator_action(model, rho, lead=0)
    jp_dense = (1j * np.trace((N_L @ H_SL - H_SL @ N_L) @ rho)).real
    je_dense = (1j * np.trace((H_L @ H_SL - H_SL @ H_L) @ rho)).real + np.trace(
        H_SL @ flow
    ).real
    return max(abs(j_p[0] - jp_dense), abs(j_e[0] - je_dense))


def _check_integrated_identities(_rng):
    system = SystemSpec(num_sites=1, onsite=1.0, hopping=0.0, attach_sites=(1,))
    lead = LeadSpec(modes=8, half_bandwidth=4.0, coupling=0.8, temperature=1.0)
    model = assemble_extended_model(system, [lead])
    # trapezoid error scales as dt^2; 0.002 puts the check well under 1e-5
    record = run_thermo_trajectory(model, dt=0.002, t_max=8.0)
    res_n, res_e = integrated_current_residuals(record)
    return max(np.abs(res_n).max(), np.abs(res_e).max())


ORACLE_CHECKS = [
    ("fock state occupations round-trip (D=3)", 1e-12, _check_state_roundtrip),
    ("gaussian form round-trip (D=4)", 1e-12, _check_form_roundtrip),
    ("entropy vs dense oracle (D=4)", 1e-10, _check_entropy),
    ("relative entropy vs dense oracle (D=4)", 1e-10, _check_relative_entropy),
    ("fidelity vs dense oracle, commuting (D=4)", 1e-10, _check_fidelity),
    ("block reduction vs dense partial trace", 1e-10, _check_reduction),
    ("RK4 trajectory vs dense master equation", 1e-8, _check_lindblad),
    ("external currents vs dense dissipator", 1e-8, _check_external_currents),
    ("internal currents vs dense commutators", 1e-8, _check_internal_currents),
    ("integrated current identities (L=8)", 1e-5, _check_integrated_identities),
]


def run_oracle_check(params: dict, out_dir: Path, stream=None) -> RunResult:
    """Cross-validate the covariance machinery against the dense Fock-space
    oracles; any residual above its tolerance fails the run."""
    stream = stream or sys.stdout
    rng = np.random.default_rng(20240817)
    failures = []
    report_lines = []
    for name, tol, check in ORACLE_CHECKS:
        observed = float(check(rng))
        ok = observed <= tol
        line = f"{name:<44s} tol={tol:8.1e}  observed={observed:8.1e}  {'PASS' if ok else 'FAIL'}"
        report_lines.append(line)
        print(line, file=stream)
        if not ok:
            failures.append(line)
    report = out_dir / "oracle_check.txt"
    report.write_text("\n".join(report_lines) + "\n")
    manifest = out_dir / "oracle_check_manifest.txt"
    _write_manifest(manifest, "oracle-check", params, {"failures": failures})
    return RunResult(report, manifest, failures)


_RUNNERS = {
    "thermalization-sweep": run_thermalization_sweep,
    "entropy-rates": run_entropy_rates,
    "budget-single": run_budget_single,
    "budget-multi": run_budget_multi,
    "oracle-check": run_oracle_check,
}


def run_scenario(scenario: str, params: dict, out_dir) -> RunResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[scenario](params, out_dir)
