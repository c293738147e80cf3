import math

import numpy as np
import pytest

from vortex_ed.lattice import (LatticeSpec, build_bonds, default_pins, gauge_transform,
                               pin_adjacent_plaquettes, plaquette_flux, plaquettes)


def test_default_pins_4x4():
    assert default_pins(4, 4) == ((1, 1), (3, 3))
    spec = LatticeSpec()
    assert spec.pins == (5, 15)


def test_bond_count_and_strengths():
    spec = LatticeSpec(j_pin=0.3)
    bonds = build_bonds(spec)
    assert len(bonds) == 2 * spec.n_sites
    weak = [b for b in bonds if b.strength == 0.3]
    # each pin has four distinct bonds, the pins are not neighbours
    assert len(weak) == 8


@pytest.mark.parametrize("n_phi", [0.0, 0.5, 2.0, 3.7])
@pytest.mark.parametrize("shape", [(4, 4), (3, 5), (6, 3)])
def test_uniform_flux(n_phi, shape):
    nx, ny = shape
    spec = LatticeSpec(nx=nx, ny=ny, n_phi=n_phi, n_particles=2)
    bonds = build_bonds(spec)
    target = 2 * math.pi * n_phi / (nx * ny)
    off = []
    for i, p in enumerate(plaquettes(spec, bonds)):
        d = np.angle(np.exp(1j * (plaquette_flux(bonds, p) - target)))
        if abs(d) > 1e-12:
            off.append((i, d))
    # total flux on a torus is an integer; the corner plaquette absorbs the remainder
    if float(n_phi).is_integer():
        assert off == []
    else:
        assert [i for i, _ in off] == [nx * ny - 1]
        assert np.angle(np.exp(1j * (off[0][1] + 2 * math.pi * n_phi))) == pytest.approx(0, abs=1e-12)


def test_gauge_transform_keeps_flux():
    spec = LatticeSpec(n_phi=1.7)
    bonds = build_bonds(spec)
    chi = np.random.default_rng(0).uniform(0, 2 * np.pi, spec.n_sites)
    moved = gauge_transform(bonds, chi)
    for p in plaquettes(spec, bonds):
        assert plaquette_flux(moved, p) == pytest.approx(plaquette_flux(bonds, p), abs=1e-12)


def test_pin_adjacent_plaquettes():
    spec = LatticeSpec()
    # pins (1,1) and (3,3): plaquettes with lower-left corners around them
    assert pin_adjacent_plaquettes(spec) == {0, 1, 4, 5, 10, 11, 14, 15}


def test_json_round_trip():
    spec = LatticeSpec(nx=4, ny=4, n_phi=2.0, j_pin=0.6, u=10.0, n_max=3)
    assert LatticeSpec.from_json(spec.to_json()) == spec


@pytest.mark.parametrize("bad", [
    dict(nx=2),
    dict(n_max=2),                                # hard-core needs n_max = 1
    dict(n_particles=17),
    dict(pin_sites=((0, 0), (0, 0))),
    dict(pin_sites=((0, 0), (4, 0))),
    dict(j_pin=-1.0),
])
def test_validation(bad):
    with pytest.raises(ValueError):
        LatticeSpec(**bad)


def test_unknown_field_rejected():
    with pytest.raises(ValueError):
        LatticeSpec.from_dict({"nx": 4, "flux": 2})
