"""
Ready-made run configurations for the standard 4x4, eight-boson study.
"""

from __future__ import annotations

from dataclasses import replace

from .lattice import LatticeSpec
from .sweep import EigenSettings, NmaxConvergence, SweepConfig, value_range

BASE = LatticeSpec(nx=4, ny=4, n_particles=8, n_max=1, u=None, v=0.0)

FIG4_N_PHI = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
FINITE_U = (5.0, 10.0, 15.0, 19.0, 20.0)
VORTICITY_J_PIN = (1.5, 1.0, 0.9, 0.6)
BACKGROUND_J_PIN = 0.1


def flux_sweep(j_pin: float = 0.6, start: float = 0.0, stop: float = 3.2,
               step: float = 0.01) -> SweepConfig:
    """|<a†_1 a_2>|, its phase, fidelity and EoF against total flux."""
    return SweepConfig(base=replace(BASE, j_pin=j_pin), sweep_variable="n_phi",
                       values=value_range(start, stop, step),
                       output={"recipe": "flux_sweep"})


def pinning_sweep(n_phi: float, values=None) -> SweepConfig:
    """EoF against pin strength at fixed flux.

    The default grid is refined to 0.01 on [0.75, 0.95], where the EoF
    collapses at two flux quanta.
    """
    if values is None:
        values = sorted({0.01, *value_range(0.05, 1.2, 0.05), *value_range(0.75, 0.95, 0.01)})
    return SweepConfig(base=replace(BASE, n_phi=n_phi), sweep_variable="j_pin", values=values,
                       output={"recipe": "pinning_sweep"})


def pinning_sweeps(values=None) -> list[SweepConfig]:
    return [pinning_sweep(n, values) for n in FIG4_N_PHI]


def finite_u_sweep(values=FINITE_U, tol: float = 1e-8, start: int = 2) -> SweepConfig:
    """Soft-core coherence against U at n_phi = 2, with n_max raised to convergence."""
    base = LatticeSpec(nx=4, ny=4, n_particles=8, n_phi=2.0, j_pin=0.6, u=values[0], n_max=start)
    return SweepConfig(base=base, sweep_variable="u", values=list(values), observables=["corr"],
                       eigensolver=EigenSettings(k=1),
                       n_max_convergence=NmaxConvergence(enabled=True, start=start, tol=tol),
                       output={"recipe": "finite_u"})


def vorticity_specs(n_phi: float = 2.0, j_pins=VORTICITY_J_PIN) -> tuple[LatticeSpec, list]:
    """(background run, list of runs) for the vorticity maps."""
    bg = replace(BASE, n_phi=n_phi, j_pin=BACKGROUND_J_PIN)
    return bg, [replace(BASE, n_phi=n_phi, j_pin=j) for j in j_pins]


RECIPES = {
    "flux": flux_sweep,
    "finite_u": finite_u_sweep,
}
