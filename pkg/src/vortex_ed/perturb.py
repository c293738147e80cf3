"""
Second-order degenerate perturbation theory in the pin bonds.

With every pin bond switched off the two pin sites decouple, and eigenstates
of H0 factor as |Psi_m^(n)> (x) |n_1 n_2>, where Psi_m^(n) is the n-th level of
the remaining sites holding m bosons. The pin bonds V = H - H0 then move one
boson between a pin and its neighbours, and

    H_eff = -sum_k V|k><k|V / (E_k - E_D) = -(R0 I + R . sigma)

on the ground doublet {|1~> = |Psi>|10>, |0~> = |Psi>|01>}.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import eig
from .fock import FockBasis
from .hamiltonian import build, build_from_bonds
from .lattice import Bond, LatticeSpec, build_bonds
from .observables import two_site_rdm

PIN_CONFIGS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass
class RestSector:
    """Low levels of the non-pin sites at fixed boson number."""

    m: int
    basis: FockBasis
    energies: np.ndarray
    vectors: np.ndarray


@dataclass
class Multiplet:
    energy: float
    members: list  # (pin config, m, level index)


@dataclass
class H0Structure:
    multiplets: list
    ground_energy: float
    gaps: tuple
    sectors: dict = field(repr=False, default_factory=dict)

    @property
    def ground_degeneracy(self) -> int:
        return len(self.multiplets[0].members)


@dataclass
class BlochEffective:
    r0: float
    rx: float
    ry: float
    rz: float
    theta: float
    phi: float
    e_d: float = float("nan")
    matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def r1(self) -> float:
        return math.sqrt(self.rx ** 2 + self.ry ** 2 + self.rz ** 2)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.r0, self.rx, self.ry, self.rz])

    def ground_energy(self) -> float:
        """E_D - R0 - R1."""
        return self.e_d - self.r0 - self.r1

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("matrix")
        return json.dumps(d)


def _rest_layout(spec: LatticeSpec):
    pins = spec.pins
    rest = [s for s in range(spec.n_sites) if s not in pins]
    return rest, {s: k for k, s in enumerate(rest)}


def _rest_sector(spec, m, n_levels, tol, seed):
    rest, local = _rest_layout(spec)
    bonds = [Bond(local[b.source], local[b.target], b.phase, b.strength)
             for b in build_bonds(spec) if b.source in local and b.target in local]
    basis = FockBasis(len(rest), m, 1)
    h = build_from_bonds(basis, bonds, u=None, v=spec.v, mu=0.0)
    k = min(n_levels, basis.dim)
    if basis.dim <= 64:
        w, v = eig.dense_lowest(h, k)
    else:
        sol = eig.lowest(h, k=k, tol=tol, seed=seed, complete_groups=True)
        w, v = sol.energies, sol.vectors
    return RestSector(m, basis, w, v)


def _check_spec(spec: LatticeSpec):
    if not spec.hardcore:
        raise ValueError("perturbation theory is implemented for hard-core bosons")
    if spec.v != 0.0:
        raise ValueError("pins only decouple at V = 0")


def h0_structure(spec: LatticeSpec, n_levels: int = 6, tol: float = 1e-10, seed: int = 0,
                 threshold: float = eig.DEGENERACY_THRESHOLD) -> H0Structure:
    """Low spectrum of the unpinned Hamiltonian, labelled by pin occupancies.

    ``gaps`` holds the spacings between the first three distinct multiplets.
    """
    _check_spec(spec)
    n = spec.n_particles
    sectors = {}
    levels = []
    for cfg in PIN_CONFIGS:
        m = n - sum(cfg)
        if not 0 <= m <= spec.n_sites - 2:
            continue
        if m not in sectors:
            sectors[m] = _rest_sector(spec, m, n_levels, tol, seed)
        for idx, e in enumerate(sectors[m].energies):
            levels.append((float(e) - spec.mu * n, cfg, m, idx))
    levels.sort(key=lambda t: (t[0], t[1]))
    multiplets = []
    for e, cfg, m, idx in levels:
        if multiplets and e - multiplets[-1].members[-1][3] < threshold:
            multiplets[-1].members.append((cfg, m, idx, e))
        else:
            multiplets.append(Multiplet(e, [(cfg, m, idx, e)]))
    for mp in multiplets:
        mp.members = [(c, m, i) for c, m, i, _ in mp.members]
    energies = [mp.energy for mp in multiplets]
    gaps = tuple(float(b - a) for a, b in zip(energies[:3], energies[1:3]))
    return H0Structure(multiplets, energies[0], gaps, sectors)


def _pin_terms(spec: LatticeSpec):
    """Directed hops (to, from, coefficient of a†_to a_from) on pin-incident bonds."""
    pins = set(spec.pins)
    out = []
    for b in build_bonds(spec):
        if b.source in pins or b.target in pins:
            c = -spec.j_pin * np.exp(1j * b.phase)
            out.append((b.target, b.source, c))
            out.append((b.source, b.target, np.conj(c)))
    return out


def _ladder(src: FockBasis, dst: FockBasis, site: int, create: bool):
    """Index maps for a†_site (create) or a_site between hard-core bases."""
    bit = 1 << site
    has = (src.codes & bit) != 0
    rows = np.nonzero(~has if create else has)[0]
    new = src.codes[rows] ^ bit
    return rows, dst.index(new)


def _apply_v(spec, struct, vec_m, cfg):
    """V acting on |vec>|cfg>: dict new pin config -> vector on its rest sector."""
    p1, p2 = spec.pins
    _, local = _rest_layout(spec)
    m = spec.n_particles - sum(cfg)
    out = {}
    occ = {p1: cfg[0], p2: cfg[1]}
    for to, frm, coef in _pin_terms(spec):
        if to in occ and frm in occ:
            if occ[frm] == 1 and occ[to] == 0:
                new = dict(occ)
                new[frm], new[to] = 0, 1
                key = (new[p1], new[p2])
                out[key] = out.get(key, 0) + coef * vec_m
            continue
        if frm in occ:
            # pin -> rest
            if occ[frm] == 0:
                continue
            new = dict(occ)
            new[frm] = 0
            m2 = m + 1
            op_create = True
            site = local[to]
        else:
            if occ[to] == 1:
                continue
            new = dict(occ)
            new[to] = 1
            m2 = m - 1
            op_create = False
            site = local[frm]
        if m2 not in struct.sectors:
            continue
        src_b, dst_b = struct.sectors[m].basis, struct.sectors[m2].basis
        rows, dest = _ladder(src_b, dst_b, site, op_create)
        w = np.zeros(dst_b.dim, dtype=complex)
        w[dest] = coef * vec_m[rows]
        key = (new[p1], new[p2])
        out[key] = out.get(key, 0) + w
    return out


def bloch_decompose(h_eff: np.ndarray) -> tuple[float, float, float, float]:
    """(R0, Rx, Ry, Rz) with h_eff = -(R0 I + Rx sx + Ry sy + Rz sz)."""
    r0 = -0.5 * float(np.trace(h_eff).real)
    rx = -float(h_eff[0, 1].real)
    ry = float(h_eff[0, 1].imag)
    rz = -0.5 * float((h_eff[0, 0] - h_eff[1, 1]).real)
    return r0, rx, ry, rz


def bloch_angles(rx: float, ry: float, rz: float, eps: float = 1e-14) -> tuple[float, float]:
    r1 = math.sqrt(rx * rx + ry * ry + rz * rz)
    if r1 < eps:
        return float("nan"), float("nan")
    return math.acos(max(-1.0, min(1.0, rz / r1))), math.atan2(ry, rx)


def effective_hamiltonian(spec: LatticeSpec, n_intermediate: int = 1, n_levels: int = 6,
                          struct: H0Structure | None = None, **kw) -> BlochEffective:
    """Second-order H_eff on the ground doublet, using ``n_intermediate`` excited multiplets."""
    if n_intermediate < 1:
        raise ValueError("n_intermediate must be >= 1")
    if struct is None:
        struct = h0_structure(replace(spec, j_pin=0.0), n_levels=n_levels, **kw)
    ground = struct.multiplets[0]
    doublet = [(1, 0), (0, 1)]
    members = {c: (m, i) for c, m, i in ground.members}
    if len(ground.members) != 2 or not all(c in members for c in doublet):
        raise ValueError("ground level of H0 is not the |10>, |01> doublet")
    if len(struct.multiplets) <= n_intermediate:
        raise ValueError("not enough excited multiplets; raise n_levels")
    e_d = ground.energy
    images = []
    for c in doublet:
        m, i = members[c]
        images.append(_apply_v(spec, struct, struct.sectors[m].vectors[:, i], c))
    h = np.zeros((2, 2), dtype=complex)
    # first order: direct pin-pin hops within the doublet
    for a, ca in enumerate(doublet):
        m, i = members[ca]
        psi = struct.sectors[m].vectors[:, i]
        for b in range(2):
            if ca in images[b]:
                h[a, b] += np.vdot(psi, images[b][ca])
    for mp in struct.multiplets[1:1 + n_intermediate]:
        denom = mp.energy - e_d
        for cfg, m, idx in mp.members:
            k = struct.sectors[m].vectors[:, idx]
            amps = [np.vdot(k, im[cfg]) if cfg in im else 0.0 for im in images]
            for a in range(2):
                for b in range(2):
                    h[a, b] -= np.conj(amps[a]) * amps[b] / denom
    r0, rx, ry, rz = bloch_decompose(h)
    theta, phi = bloch_angles(rx, ry, rz)
    return BlochEffective(r0, rx, ry, rz, theta, phi, e_d, h)


def exact_angles(spec: LatticeSpec, tol: float = 1e-10, seed: int = 0) -> tuple[float, float, float]:
    """Bloch angles of the exact ground state restricted to {|10>, |01>}, plus E0."""
    from .hamiltonian import basis_for

    basis = basis_for(spec)
    sol = eig.lowest(build(spec, basis=basis), k=1, tol=tol, seed=seed, complete_groups=True)
    rdm = two_site_rdm(basis, sol.ground, *spec.pins)
    x10, x01 = rdm.matrix[2, 2].real, rdm.matrix[1, 1].real
    c = rdm.coherence
    theta = math.atan2(2 * abs(c), x10 - x01)
    phi = float(np.angle(c)) if abs(c) > 1e-14 else float("nan")
    return theta, phi, float(sol.energies[0])


def compare_with_exact(spec: LatticeSpec, n_intermediate: int = 1, **kw):
    """(theta_exact, phi_exact, theta_pert, phi_pert)."""
    te, pe, _ = exact_angles(spec)
    be = effective_hamiltonian(spec, n_intermediate=n_intermediate, **kw)
    return te, pe, be.theta, be.phi
