import numpy as np
import pytest

from vortex_ed import spinfit
from vortex_ed.eig import lowest
from vortex_ed.hamiltonian import basis_for, build
from vortex_ed.lattice import LatticeSpec
from vortex_ed.observables import correlation


@pytest.mark.parametrize("f_xx,f_zz,c", [(0.06, 0.22, -13.0), (-0.3, 0.5, 1.0), (0.0, 0.1, 0.0)])
def test_round_trip(f_xx, f_zz, c):
    res = spinfit.fit(spinfit.spin_spectrum(f_xx, f_zz, c))
    assert res.f_xx_abs == pytest.approx(abs(f_xx), abs=1e-12)
    assert res.f_zz == pytest.approx(f_zz, abs=1e-12)
    assert res.c == pytest.approx(c, abs=1e-12)
    assert res.residual < 1e-12 and res.structure_ok


def test_broken_doublet_flagged():
    res = spinfit.fit([-1.0, -0.8, 0.0, 0.1])
    assert not res.structure_ok
    assert res.residual > 0


def test_needs_four_levels():
    with pytest.raises(ValueError):
        spinfit.fit([0.0, 1.0, 2.0])


def test_ground_symmetry_sign():
    assert spinfit.ground_is_symmetric(0.3) is True
    assert spinfit.ground_is_symmetric(-0.3 + 0.01j) is False
    assert spinfit.ground_is_symmetric(0.0) is None


def test_frozen_pinned_levels():
    spec = LatticeSpec(n_phi=2.0, j_pin=0.6)
    b = basis_for(spec)
    sol = lowest(build(spec, basis=b), k=4)
    res = spinfit.fit(sol.energies)
    assert res.f_xx_abs == pytest.approx(0.0630911, abs=1e-6)
    assert res.f_zz == pytest.approx(0.2236, abs=5e-4)
    assert res.c == pytest.approx(-13.283, abs=1e-3)
    assert res.structure_ok
    # Arg c = pi: antisymmetric pin state in the ground level
    assert spinfit.ground_is_symmetric(correlation(b, sol.ground, *spec.pins)) is False
