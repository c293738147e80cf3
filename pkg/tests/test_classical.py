import math

import numpy as np
import pytest

from vortex_ed import classical as cl
from vortex_ed.lattice import LatticeSpec


def big(j_pin):
    return LatticeSpec(nx=24, ny=24, n_particles=8, j_pin=j_pin, pin_sites=((12, 12), (0, 0)))


def test_winding():
    spec = big(1.0)
    ph = cl.phases(spec, cl.VortexAnsatz([(5.5, 5.5)], [1]))
    loop = [(5, 5), (6, 5), (6, 6), (5, 6), (5, 5)]
    idx = [spec.site_index(*p) for p in loop]
    w = sum(np.angle(np.exp(1j * (ph[b] - ph[a]))) for a, b in zip(idx, idx[1:]))
    assert w == pytest.approx(2 * math.pi)


def test_center_on_site_rejected():
    with pytest.raises(ValueError):
        cl.phases(big(1.0), cl.VortexAnsatz([(3, 4)], [1]))


def test_ansatz_validation():
    with pytest.raises(ValueError):
        cl.VortexAnsatz([(0.5, 0.5)], [0])
    with pytest.raises(ValueError):
        cl.VortexAnsatz([(0.5, 0.5)], [1, 1])


def test_uniform_pins_no_pinning_energy():
    assert cl.pinning_energy(big(1.0), cl.VortexAnsatz([(4.5, 4.5)], [1])) == 0.0


def test_global_phase_invariance():
    spec = big(0.5)
    a = cl.VortexAnsatz([(4.5, 7.5), (15.5, 15.5)], [1, -1])
    assert cl.classical_energy(spec, a, 0.0) == pytest.approx(cl.classical_energy(spec, a, 1.1), abs=1e-10)


def test_vacuum_energy():
    # flat phase, zero flux, half filling: -2 J rho per bond
    spec = LatticeSpec(nx=6, ny=6, n_particles=8, pin_sites=((0, 0), (3, 3)))
    e = cl.classical_energy(spec, cl.VortexAnsatz([], []))
    assert e == pytest.approx(-2 * 0.5 * 2 * spec.n_sites)


PATH = [(12.5 + d, 12.5) for d in range(8, -1, -1)]


@pytest.mark.parametrize("j_pin,trend", [(0.5, "decreasing"), (0.9, "decreasing"), (1.5, "increasing")])
def test_weak_pin_attracts(j_pin, trend):
    prof = cl.pinning_energy_profile(big(j_pin), PATH)
    assert prof.trend == trend
    assert len(prof.energies) == len(PATH)


def test_sign_flips_with_coupling():
    a = cl.VortexAnsatz([(12.5, 12.5)], [1])
    far = cl.VortexAnsatz([(20.5, 12.5)], [1])
    weak = cl.pinning_energy(big(0.5), a, 0) - cl.pinning_energy(big(0.5), far, 0)
    strong = cl.pinning_energy(big(1.5), a, 0) - cl.pinning_energy(big(1.5), far, 0)
    assert weak < 0 < strong
    assert weak == pytest.approx(-strong)
