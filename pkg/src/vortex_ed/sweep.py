"""
Parameter sweeps: configuration, per-point measurement and serialisation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import eig
from .hamiltonian import basis_for, build
from .lattice import LatticeSpec, build_bonds, pin_adjacent_plaquettes
from .observables import (background_vorticity, correlation, eof, fidelity, phase_law_m,
                          phase_law_residual, two_site_rdm, vorticity_map)

SWEEP_VARIABLES = ("n_phi", "j_pin", "u", "v")
OBSERVABLES = ("corr", "fidelity", "eof", "vorticity")
CSV_COLUMNS = ("parameter", "E0", "gap", "corr_abs", "corr_arg", "fidelity", "eof", "degenerate_flag")
THREADS_ENV = "VORTEX_ED_THREADS"


class ConfigError(ValueError):
    pass


@dataclass
class EigenSettings:
    k: int = 2
    tol: float = 1e-10
    seed: int = 0
    degeneracy_threshold: float = eig.DEGENERACY_THRESHOLD


@dataclass
class NmaxConvergence:
    """Raise n_max from ``start`` until E0 moves by less than ``tol``."""

    enabled: bool = False
    start: int = 2
    tol: float = 1e-8
    max_n_max: int | None = None


@dataclass
class SweepConfig:
    base: LatticeSpec
    sweep_variable: str
    values: list
    observables: list = field(default_factory=lambda: ["corr", "fidelity", "eof"])
    eigensolver: EigenSettings = field(default_factory=EigenSettings)
    n_max_convergence: NmaxConvergence = field(default_factory=NmaxConvergence)
    output: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
        if len(self.values) == 0:
            raise ConfigError("values must be nonempty")
        bad = [o for o in self.observables if o not in OBSERVABLES]
        if bad:
            raise ConfigError(f"unknown observables {bad}; valid: {OBSERVABLES}")
        self.values = sorted(float(v) for v in self.values)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "sweep_variable": self.sweep_variable,
            "values": list(self.values),
            "observables": list(self.observables),
            "eigensolver": asdict(self.eigensolver),
            "n_max_convergence": asdict(self.n_max_convergence),
            "output": dict(self.output),
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (output location excluded)."""
        d = self.to_dict()
        d.pop("output")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        try:
            d = dict(d)
            base = LatticeSpec.from_dict(d.pop("base", {}))
            values = d.pop("values")
            if isinstance(values, dict):
                values = value_range(**values)
            eigen = EigenSettings(**d.pop("eigensolver", {}))
            conv = NmaxConvergence(**d.pop("n_max_convergence", {}))
            return cls(base=base, values=values, eigensolver=eigen, n_max_convergence=conv, **d)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid sweep config: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc


def value_range(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid rounded to 10 decimals."""
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


@dataclass
class PointRecord:
    parameter: float
    E0: float = float("nan")
    gap: float = float("nan")
    corr_abs: float = float("nan")
    corr_arg: float = float("nan")
    fidelity: float = float("nan")
    eof: float = float("nan")
    degenerate_flag: bool = False
    degeneracy: int = 0
    levels: list = field(default_factory=list)
    phase_m: float = float("nan")
    phase_residual: float = float("nan")
    overlap_prev: float = float("nan")
    n_max: int = 0
    dim: int = 0
    matvecs: int = 0
    vorticity: list | None = None
    error: str | None = None

    def csv_row(self) -> list:
        return [self.parameter, self.E0, self.gap, self.corr_abs, self.corr_arg,
                self.fidelity, self.eof, int(self.degenerate_flag)]


@dataclass
class SweepResult:
    config: SweepConfig
    records: list
    wall_time: float = 0.0

    @property
    def failed(self) -> bool:
        return any(r.error for r in self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "config_hash": self.config.digest(),
                "wall_time": self.wall_time,
                "records": [_clean(asdict(r)) for r in self.records]}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                w.writerow([repr(x) if isinstance(x, float) else x for x in r.csv_row()])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _clean(obj):
    """JSON-safe copy: nan and inf become None."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def solve_levels(h, settings: EigenSettings, n_groups: int = 2, v0=None) -> eig.EigenSolution:
    """Lowest eigenpairs with complete degenerate groups, at least ``n_groups`` of them."""
    k = max(1, min(settings.k, h.dim))
    while True:
        sol = eig.lowest(h, k=k, tol=settings.tol, seed=settings.seed,
                         degeneracy_threshold=settings.degeneracy_threshold, complete_groups=True,
                         v0=v0)
        if len(sol.degeneracy_groups) >= n_groups or len(sol.energies) >= h.dim:
            return sol
        k = len(sol.energies) + 1


def ground_state(spec: LatticeSpec, settings: EigenSettings | None = None, n_groups: int = 2,
                 v0=None):
    """(basis, solution) for one spec."""
    settings = settings or EigenSettings()
    basis = basis_for(spec)
    return basis, solve_levels(build(spec, basis=basis), settings, n_groups, v0=v0)


def embed(vec: np.ndarray, src, dst) -> np.ndarray:
    """Carry a vector from basis ``src`` into a larger basis ``dst`` (zero elsewhere)."""
    codes = src.occupations().astype(np.int64) @ dst._powers
    out = np.zeros(dst.dim, dtype=complex)
    out[dst.index(codes)] = vec
    return out


def converge_n_max(spec: LatticeSpec, settings: EigenSettings, conv: NmaxConvergence):
    """Solve at increasing n_max until |E0(n) - E0(n-1)| < conv.tol.

    Returns (spec, basis, solution) at the converged n_max. Reaching
    n_max = N (the untruncated sector) counts as converged.
    """
    top = conv.max_n_max or spec.n_particles
    prev = None
    v0 = None
    for n_max in range(conv.start, top + 1):
        s = replace(spec, n_max=n_max)
        basis, sol = ground_state(s, replace(settings, k=1), n_groups=1, v0=v0)
        if prev is not None and abs(sol.energies[0] - prev) < conv.tol:
            return s, basis, sol
        prev = sol.energies[0]
        v0 = embed(sol.vectors[:, 0], basis, basis_for(replace(spec, n_max=n_max + 1))) \
            if n_max < top else None
    if top >= spec.n_particles:
        return s, basis, sol
    raise eig.ConvergenceError(f"E0 not converged in n_max up to {top}")


def measure_point(config: SweepConfig, value: float):
    """Record plus ground vectors for one sweep value."""
    spec = replace(config.base, **{config.sweep_variable: value})
    rec = PointRecord(parameter=value)
    try:
        if config.n_max_convergence.enabled and not spec.hardcore:
            spec, basis, sol = converge_n_max(spec, config.eigensolver, config.n_max_convergence)
            if len(sol.degeneracy_groups) < 2:
                sol = solve_levels(build(spec, basis=basis), config.eigensolver)
        else:
            basis, sol = ground_state(spec, config.eigensolver)
    except Exception as exc:  # recorded, sweep continues
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec, None
    g = sol.ground
    rec.E0 = float(sol.energies[0])
    rec.gap = sol.gap()
    rec.degeneracy = sol.ground_degeneracy
    rec.degenerate_flag = rec.degeneracy > 1
    rec.levels = [float(e) for e in sol.energies[:4]]
    rec.n_max = spec.n_max
    rec.dim = basis.dim
    rec.matvecs = sol.matvecs
    p1, p2 = spec.pins
    obs = set(config.observables)
    if obs & {"corr", "fidelity", "eof"}:
        c = correlation(basis, g, p1, p2)
        rec.corr_abs, rec.corr_arg = abs(c), float(np.angle(c))
        if spec.nx == spec.ny:
            rec.phase_m = phase_law_m(c, spec.n_phi)
            rec.phase_residual = phase_law_residual(c, spec.n_phi)
        if spec.hardcore and obs & {"fidelity", "eof"}:
            rdm = two_site_rdm(basis, g, p1, p2)
            if "fidelity" in obs:
                rec.fidelity = fidelity(rdm, rec.corr_arg)
            if "eof" in obs:
                rec.eof = eof(rdm)
    if "vorticity" in obs:
        rec.vorticity = [float(x) for x in vorticity_map(spec, basis, g, build_bonds(spec)).values]
    return rec, g


def _worker(args):
    config_dict, value = args
    return measure_point(SweepConfig.from_dict(config_dict), value)


def group_overlap(a: np.ndarray | None, b: np.ndarray | None) -> float:
    """Largest singular value of A^H B; |<a|b>| for single vectors."""
    if a is None or b is None or a.shape[0] != b.shape[0]:
        return float("nan")
    return float(np.linalg.svd(a.conj().T @ b, compute_uv=False).max())


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def run_sweep(config: SweepConfig, workers: int | None = None) -> SweepResult:
    """Evaluate every sweep value; output is independent of ``workers``."""
    workers = workers or default_threads()
    t0 = time.time()
    if workers > 1 and len(config.values) > 1:
        d = config.to_dict()
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_worker, [(d, v) for v in config.values]))
    else:
        out = [measure_point(config, v) for v in config.values]
    records = [r for r, _ in out]
    for i in range(1, len(out)):
        records[i].overlap_prev = group_overlap(out[i - 1][1], out[i][1])
    return SweepResult(config, records, time.time() - t0)


def vorticity_run(spec: LatticeSpec, settings: EigenSettings | None = None):
    """Raw vorticity map of the (degenerate-averaged) ground level of ``spec``."""
    basis, sol = ground_state(spec, settings, n_groups=1)
    vmap = vorticity_map(spec, basis, sol.ground, build_bonds(spec))
    return vmap, sol


def run_vorticity(background_spec: LatticeSpec, specs: Sequence[LatticeSpec],
                  settings: EigenSettings | None = None) -> dict:
    """Raw and background-subtracted maps; the background comes from ``background_spec``."""
    bg_map, _ = vorticity_run(background_spec, settings)
    bg = background_vorticity(bg_map, background_spec)
    runs = []
    for spec in specs:
        vmap, sol = vorticity_run(spec, settings)
        runs.append({"spec": spec.to_dict(), "degeneracy": sol.ground_degeneracy,
                     "E0": float(sol.energies[0]), "raw": vmap.to_dict(),
                     "subtracted": vmap.subtract(bg).to_dict(),
                     "peak": peak_location(vmap.subtract(bg), spec)})
    return {"background": bg, "background_spec": background_spec.to_dict(),
            "background_raw": bg_map.to_dict(), "runs": runs}


def peak_location(vmap, spec: LatticeSpec, tol: float = 1e-6) -> str:
    """'pins' if |value| is largest on pin plaquettes, 'away' if elsewhere, 'uniform' if flat."""
    v = np.asarray(vmap.values)
    if v.max() - v.min() < tol:
        return "uniform"
    near = sorted(pin_adjacent_plaquettes(spec))
    far = [p for p in range(len(v)) if p not in near]
    return "pins" if np.abs(v[near]).mean() > np.abs(v[far]).mean() else "away"
