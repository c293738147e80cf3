"""
Square torus geometry with Peierls phases in the Landau gauge.

Sites are indexed row-major, ``index = x + nx * y``. Every undirected
nearest-neighbour bond is stored once, oriented along +x or +y, and carries
the phase picked up by a boson hopping from ``source`` to ``target``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

Site = tuple[int, int]


def default_pins(nx: int, ny: int) -> tuple[Site, Site]:
    """Antipodal pair on the diagonal through the corner plaquette.

    For the 4x4 torus this is ((1, 1), (3, 3)). The reflection that swaps the
    two pins then maps the Landau-gauge corner plaquette onto itself.
    """
    x0, y0 = nx // 4, ny // 4
    return (x0, y0), ((x0 + nx // 2) % nx, (y0 + ny // 2) % ny)


@dataclass(frozen=True)
class LatticeSpec:
    """Physical parameters of one pinned-vortex run (energies in units of J).

    ``u=None`` selects hard-core bosons, which requires ``n_max == 1``.
    """

    nx: int = 4
    ny: int = 4
    n_phi: float = 0.0
    j: float = 1.0
    j_pin: float = 1.0
    u: float | None = None
    v: float = 0.0
    mu: float = 0.0
    n_particles: int = 8
    n_max: int = 1
    pin_sites: tuple[Site, Site] | None = None

    def __post_init__(self):
        if self.pin_sites is None:
            object.__setattr__(self, "pin_sites", default_pins(self.nx, self.ny))
        else:
            pins = tuple(tuple(int(c) for c in p) for p in self.pin_sites)
            object.__setattr__(self, "pin_sites", pins)
        self.validate()

    def validate(self) -> None:
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"lattice must be at least 3x3 (a 2-wide torus doubles its bonds), got {self.nx}x{self.ny}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not 0 <= self.n_particles <= self.n_max * self.nx * self.ny:
            raise ValueError(
                f"n_particles={self.n_particles} outside [0, {self.n_max * self.n_sites}]"
            )
        if self.u is None and self.n_max != 1:
            raise ValueError("hard-core run (u=None) requires n_max=1")
        if self.j <= 0:
            raise ValueError("j must be positive")
        if self.j_pin < 0:
            raise ValueError("j_pin must be non-negative")
        if len(self.pin_sites) != 2:
            raise ValueError("exactly two pin sites are required")
        for x, y in self.pin_sites:
            if not (0 <= x < self.nx and 0 <= y < self.ny):
                raise ValueError(f"pin site {(x, y)} outside the lattice")
        if self.pin_sites[0] == self.pin_sites[1]:
            raise ValueError("pin sites must be distinct")

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def hardcore(self) -> bool:
        return self.n_max == 1

    @property
    def pins(self) -> tuple[int, int]:
        """Pin sites as flat indices, in the order (site 1, site 2)."""
        return tuple(self.site_index(x, y) for x, y in self.pin_sites)

    def site_index(self, x: int, y: int) -> int:
        return (x % self.nx) + self.nx * (y % self.ny)

    def coords(self, s: int) -> Site:
        return s % self.nx, s // self.nx

    def with_(self, **changes) -> "LatticeSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pin_sites"] = [list(p) for p in self.pin_sites]
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: Mapping) -> "LatticeSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown LatticeSpec fields: {sorted(unknown)}")
        kw = dict(d)
        if kw.get("pin_sites") is not None:
            kw["pin_sites"] = tuple(tuple(p) for p in kw["pin_sites"])
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Bond:
    source: int
    target: int
    phase: float
    strength: float


@dataclass(frozen=True)
class Plaquette:
    """Counter-clockwise loop; ``bonds`` holds (bond index, +1/-1) pairs."""

    corner: int
    bonds: tuple[tuple[int, int], ...] = field(default=())


def build_bonds(spec: LatticeSpec) -> list[Bond]:
    """Nearest-neighbour bonds with Landau-gauge phases.

    A_y = x B on every +y bond and A_x = -y B N_x on the wrap bonds
    (nx-1, y) -> (0, y); all other +x bonds carry no phase.
    """
    nx, ny = spec.nx, spec.ny
    flux_per_plaquette = 2.0 * math.pi * spec.n_phi / (nx * ny)
    pins = set(spec.pins)
    bonds = []
    for y in range(ny):
        for x in range(nx):
            s = spec.site_index(x, y)
            # +x bond
            t = spec.site_index(x + 1, y)
            phase = -2.0 * math.pi * spec.n_phi * y / ny if x == nx - 1 else 0.0
            bonds.append((s, t, phase))
            # +y bond
            t = spec.site_index(x, y + 1)
            bonds.append((s, t, flux_per_plaquette * x))
    out = []
    for s, t, phase in bonds:
        strength = spec.j_pin if (s in pins or t in pins) else spec.j
        out.append(Bond(s, t, phase, strength))
    return out


def bond_lookup(bonds: Sequence[Bond]) -> dict[tuple[int, int], tuple[int, int]]:
    """Map (a, b) -> (bond index, orientation sign) for both directions."""
    table = {}
    for k, b in enumerate(bonds):
        table[(b.source, b.target)] = (k, +1)
        table[(b.target, b.source)] = (k, -1)
    return table


def plaquettes(spec: LatticeSpec, bonds: Sequence[Bond]) -> list[Plaquette]:
    """All nx*ny plaquettes, indexed like their lower-left corner site."""
    table = bond_lookup(bonds)
    out = []
    for y in range(spec.ny):
        for x in range(spec.nx):
            loop = [
                spec.site_index(x, y),
                spec.site_index(x + 1, y),
                spec.site_index(x + 1, y + 1),
                spec.site_index(x, y + 1),
            ]
            edges = tuple(table[(loop[i], loop[(i + 1) % 4])] for i in range(4))
            out.append(Plaquette(corner=loop[0], bonds=edges))
    return out


def plaquette_flux(bonds: Sequence[Bond], p: Plaquette) -> float:
    """Oriented phase sum around ``p`` (2*pi times the flux in units of the flux quantum)."""
    return float(sum(sign * bonds[k].phase for k, sign in p.bonds))


def gauge_transform(bonds: Sequence[Bond], chi: Mapping[int, float] | np.ndarray) -> list[Bond]:
    """Shift each bond phase by chi(target) - chi(source)."""
    return [replace(b, phase=b.phase + float(chi[b.target]) - float(chi[b.source])) for b in bonds]


def pin_adjacent_plaquettes(spec: LatticeSpec) -> set[int]:
    """Plaquette indices having a pin site as one of their corners."""
    out = set()
    for x, y in spec.pin_sites:
        for dx in (0, -1):
            for dy in (0, -1):
                out.add(spec.site_index(x + dx, y + dy))
    return out


def neighbours(spec: LatticeSpec, s: int) -> list[int]:
    x, y = spec.coords(s)
    return [spec.site_index(x + 1, y), spec.site_index(x - 1, y),
            spec.site_index(x, y + 1), spec.site_index(x, y - 1)]
