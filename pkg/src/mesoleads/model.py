"""Tight-binding chain, flat-band lead discretisation, extended-model assembly.

A central chain of ``N`` spinless fermionic sites is coupled to one or more
reservoirs.  Each reservoir is replaced by ``L`` discrete modes on a midpoint
energy grid spanning its band ``[-W, W]``; every mode is damped towards local
thermal equilibrium by its own Markovian environment.  The assembled
single-particle matrices (Hamiltonian, damping, thermal drive) over the
``D = N + sum_a L_a`` modes are all the downstream dynamics needs.

Index contract used everywhere else: system sites come first (chain order),
then the modes of each lead in ascending energy, leads in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SystemSpec",
    "LeadSpec",
    "LeadDiscretization",
    "ExtendedModel",
    "fermi_occupation",
    "discretize_lead",
    "assemble_extended_model",
]


def fermi_occupation(energy, temperature, chemical_potential=0.0):
    """Fermi-Dirac occupation 1/(exp((E - mu)/T) + 1), safe against overflow.

    Works elementwise on arrays.  ``temperature`` may be ``inf`` (returns 1/2).
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    x = (np.asarray(energy, dtype=float) - chemical_potential) / temperature
    # exp(-|x|) never overflows; the two branches cover both signs of x.
    t = np.exp(-np.abs(x))
    out = np.where(x >= 0, t / (1.0 + t), 1.0 / (1.0 + t))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SystemSpec:
    """Nearest-neighbour fermionic chain.

    Parameters
    ----------
    num_sites : int
        Number of chain sites (>= 1).
    onsite : float or sequence of float
        On-site energies; a scalar is broadcast to every site.
    hopping : float
        Nearest-neighbour tunnelling amplitude g >= 0.  The hopping enters
        the single-particle Hamiltonian with a minus sign.
    attach_sites : sequence of int
        1-based site index each lead couples to, one entry per lead.
    """

    num_sites: int
    onsite: tuple
    hopping: float
    attach_sites: tuple = (1,)

    def __post_init__(self):
        if self.num_sites < 1:
            raise ValueError("num_sites must be >= 1")
        onsite = self.onsite
        if np.isscalar(onsite):
            onsite = (float(onsite),) * self.num_sites
        else:
            onsite = tuple(float(e) for e in onsite)
        if len(onsite) != self.num_sites:
            raise ValueError(
                f"onsite has {len(onsite)} entries for {self.num_sites} sites"
            )
        if self.hopping < 0:
            raise ValueError("hopping must be non-negative")
        attach = tuple(int(p) for p in self.attach_sites)
        for p in attach:
            if not 1 <= p <= self.num_sites:
                raise ValueError(f"attachment site {p} outside 1..{self.num_sites}")
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "attach_sites", attach)


@dataclass(frozen=True)
class LeadSpec:
    """One reservoir: flat band of half-width W, hybridisation Gamma, and
    thermodynamic state (T, mu).  Energies in the global unit, k_B = 1."""

    modes: int
    half_bandwidth: float
    coupling: float
    temperature: float
    chemical_potential: float = 0.0

    def __post_init__(self):
        if self.modes < 1:
            raise ValueError("modes must be >= 1")
        if self.half_bandwidth <= 0:
            raise ValueError("half_bandwidth must be positive")
        if self.coupling <= 0:
            raise ValueError("coupling must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class LeadDiscretization:
    """Discrete damped modes representing one reservoir.

    ``energies`` is strictly increasing inside [-W, W]; ``dampings`` carries
    the uniform relaxation rate 2W/L; ``couplings`` the mode-to-site
    hybridisations; ``occupations`` the Fermi factors at the lead's (T, mu).
    """

    energies: np.ndarray
    couplings: np.ndarray
    dampings: np.ndarray
    occupations: np.ndarray

    def __post_init__(self):
        for name in ("energies", "couplings", "dampings", "occupations"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            object.__setattr__(self, name, arr)
        n = len(self.energies)
        if any(len(getattr(self, f)) != n for f in ("couplings", "dampings", "occupations")):
            raise ValueError("discretization arrays have mismatched lengths")

    def __len__(self):
        return len(self.energies)


def discretize_lead(spec: LeadSpec) -> LeadDiscretization:
    """Discretise a flat-band reservoir into L damped modes.

    The grid is the midpoint grid e_k = -W + (k - 1/2) * 2W/L, which keeps the
    modes symmetric about zero and off the band edges.  Each mode is damped at
    the level spacing, gamma_k = 2W/L, and couples to the attachment site with
    kappa_k = sqrt(Gamma * 2W/L / (2*pi)) so that the effective spectral
    density is Gamma across the whole band.
    """
    L = spec.modes
    W = spec.half_bandwidth
    spacing = 2.0 * W / L
    energies = -W + (np.arange(1, L + 1) - 0.5) * spacing
    couplings = np.full(L, np.sqrt(spec.coupling * spacing / (2.0 * np.pi)))
    dampings = np.full(L, spacing)
    occupations = fermi_occupation(energies, spec.temperature, spec.chemical_potential)
    return LeadDiscretization(energies, couplings, dampings, occupations)


@dataclass(frozen=True)
class ExtendedModel:
    """Single-particle matrices of the chain plus all discretised leads.

    Attributes
    ----------
    hamiltonian : (D, D) real symmetric ndarray
        Chain block (tridiagonal), lead blocks (diagonal mode energies) and
        the site-mode couplings.
    damping : (D,) ndarray
        Diagonal of the relaxation-rate matrix; zero on system sites.
    drive : (D,) ndarray
        Diagonal of the thermal drive, gamma_k * f_k; zero on system sites.
    system_indices : ndarray of int
        Global indices of the chain sites.
    lead_indices : tuple of ndarray
        Global indices of each lead's modes, ascending energy.
    system, leads, discretizations
        The specifications the model was assembled from.
    """

    hamiltonian: np.ndarray
    damping: np.ndarray
    drive: np.ndarray
    system_indices: np.ndarray
    lead_indices: tuple
    system: SystemSpec
    leads: tuple
    discretizations: tuple

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def num_leads(self) -> int:
        return len(self.leads)


def assemble_extended_model(
    system: SystemSpec,
    leads: Sequence[LeadSpec],
    discretizations: Sequence[LeadDiscretization] | None = None,
) -> ExtendedModel:
    """Assemble the extended single-particle matrices for chain + leads.

    When ``discretizations`` is omitted each lead is discretised with
    :func:`discretize_lead`; explicit discretizations (e.g. with modified
    couplings) are accepted as long as the mode counts match the specs.
    """
    leads = tuple(leads)
    if not leads:
        raise ValueError("at least one lead is required")
    if len(system.attach_sites) != len(leads):
        raise ValueError(
            f"{len(system.attach_sites)} attachment sites for {len(leads)} leads"
        )
    if discretizations is None:
        discretizations = tuple(discretize_lead(spec) for spec in leads)
    else:
        discretizations = tuple(discretizations)
        if len(discretizations) != len(leads):
            raise ValueError("one discretization per lead is required")
        for spec, disc in zip(leads, discretizations):
            if len(disc) != spec.modes:
                raise ValueError(
                    f"discretization has {len(disc)} modes, spec declares {spec.modes}"
                )

    n = system.num_sites
    dim = n + sum(spec.modes for spec in leads)
    H = np.zeros((dim, dim))
    damping = np.zeros(dim)
    drive = np.zeros(dim)

    H[np.arange(n), np.arange(n)] = system.onsite
    for j in range(n - 1):
        H[j, j + 1] = H[j + 1, j] = -system.hopping

    lead_indices = []
    offset = n
    for spec, disc, site in zip(leads, discretizations, system.attach_sites):
        idx = np.arange(offset, offset + spec.modes)
        p = site - 1
        H[idx, idx] = disc.energies
        H[idx, p] = disc.couplings
        H[p, idx] = disc.couplings
        damping[idx] = disc.dampings
        drive[idx] = disc.dampings * disc.occupations
        lead_indices.append(idx)
        offset += spec.modes

    return ExtendedModel(
        hamiltonian=H,
        damping=damping,
        drive=drive,
        system_indices=np.arange(n),
        lead_indices=tuple(lead_indices),
        system=system,
        leads=leads,
        discretizations=discretizations,
    )
