"""
End-to-end reference checks on the 4x4, eight-boson torus.

Each criterion is one or more tests; the per-check lines are printed in the
"acceptance criteria" section of the pytest summary. Checks that cannot be met
by this model are kept at full tolerance and marked as strict xfails.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import brute_force_matrix, record_checks
from vortex_ed import anchors, eig, perturb, recipes, spinfit
from vortex_ed import observables as ob
from vortex_ed.anchors import Check
from vortex_ed.fock import FockBasis
from vortex_ed.hamiltonian import basis_for, build
from vortex_ed.lattice import LatticeSpec, build_bonds, gauge_transform
from vortex_ed.sweep import run_sweep, run_vorticity

pytestmark = pytest.mark.acceptance

FIDELITY_REASON = ("fidelity to the nearest Bell state is at most 0.5 + |c| = 0.947 for |c| = 0.4465, "
                   "below the 0.95 bound")
DROP_REASON = "ground level above the drop is an exact doublet; every state in it has EoF = 0"
FLAT_REASON = "EoF at zero flux and j_pin = 0.01 is 0.9447; it exceeds 0.95 only below j_pin = 0.0095"
PT_REASON = ("second-order couplings from the first excited multiplet are (17.645, 9.714, 9.714, 0)e-4 J "
             "with phi = pi/4, matching exact diagonalisation rather than the reference vector")


def split(checks, names):
    """(checks expected to pass, checks listed by name)."""
    return [c for c in checks if c.name not in names], [c for c in checks if c.name in names]


def assert_all(checks):
    bad = [c.line() for c in checks if not c.passed]
    assert not bad, "\n".join(bad)


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="session")
def flux_checks():
    res = run_sweep(recipes.flux_sweep())
    assert not res.failed
    checks = anchors.check_flux_sweep(res.to_dict()["records"])
    record_checks(1, [c for c in checks if c.criterion == 1])
    record_checks(2, [c for c in checks if c.criterion == 2])
    record_checks(3, [c for c in checks if c.criterion == 3])
    return checks


@pytest.fixture(scope="session")
def pinning_checks():
    sweeps = {}
    for n_phi in (0.0, 0.5, 1.5, 2.0, 2.5, 3.0):
        res = run_sweep(recipes.pinning_sweep(n_phi))
        assert not res.failed
        sweeps[n_phi] = res.to_dict()["records"]
    checks = anchors.check_pinning_sweeps(sweeps)
    record_checks(4, checks)
    return checks


@pytest.fixture(scope="session")
def perturb_checks():
    spec = LatticeSpec(n_phi=0.5, j_pin=0.01)
    be = perturb.effective_hamiltonian(spec, n_intermediate=1)
    theta, phi, _ = perturb.exact_angles(spec)
    gaps = {n: perturb.h0_structure(spec.with_(n_phi=n, j_pin=0.0)).gaps for n in anchors.H0_GAPS}
    bloch = dict(r0=be.r0, rx=be.rx, ry=be.ry, rz=be.rz, theta=be.theta, phi=be.phi)
    checks = anchors.check_perturb(bloch, (theta, phi), gaps)
    record_checks(7, checks)
    return checks


# ---------------------------------------------------------------- 1-3

def test_criterion_1_coherence_vs_flux(flux_checks):
    assert_all([c for c in flux_checks if c.criterion == 1])


def test_criterion_2_phase_law_and_jumps(flux_checks):
    assert_all([c for c in flux_checks if c.criterion == 2])


def test_criterion_3_eof(flux_checks):
    ok, _ = split([c for c in flux_checks if c.criterion == 3], {"fidelity at n_phi = 2"})
    assert_all(ok)


@pytest.mark.xfail(strict=True, reason=FIDELITY_REASON)
def test_criterion_3_fidelity(flux_checks):
    _, hard = split(flux_checks, {"fidelity at n_phi = 2"})
    assert hard
    assert_all(hard)


# ---------------------------------------------------------------- 4

DROP = "EoF just above the drop"
FLAT = "EoF at n_phi = 0.0, j_pin = 0.01"


def test_criterion_4_pinning(pinning_checks):
    ok, _ = split(pinning_checks, {DROP, FLAT})
    assert_all(ok)


@pytest.mark.xfail(strict=True, reason=DROP_REASON)
def test_criterion_4_eof_above_drop(pinning_checks):
    _, hard = split(pinning_checks, {DROP})
    assert hard
    assert_all(hard)


@pytest.mark.xfail(strict=True, reason=FLAT_REASON)
def test_criterion_4_zero_flux_weak_pin(pinning_checks):
    _, hard = split(pinning_checks, {FLAT})
    assert hard
    assert_all(hard)


# ---------------------------------------------------------------- 5

def test_criterion_5_vorticity():
    bg, specs = recipes.vorticity_specs()
    res = run_vorticity(bg, specs)
    checks = anchors.check_vorticity(res, ob.analytic_background(1 / 16, 1 / 2, 2))
    uniform = [r for r in res["runs"] if r["spec"]["j_pin"] == 1.0][0]
    vals = np.asarray(uniform["subtracted"]["values"])
    spread = float(vals.max() - vals.min())
    checks.append(Check(5, "subtracted spread at j_pin = 1", spread, "< 1e-6", spread < 1e-6))
    record_checks(5, checks)
    assert len(checks) == 7
    assert_all(checks)


# ---------------------------------------------------------------- 6

def test_criterion_6_spin_fit():
    spec = LatticeSpec(n_phi=2.0, j_pin=0.6)
    sol = eig.lowest(build(spec), k=4)
    checks = anchors.check_spinfit(spinfit.fit(sol.energies))
    record_checks(6, checks)
    assert_all(checks)


# ---------------------------------------------------------------- 7

PT_HARD = {"R0 (1e-4 J)", "Rx (1e-4 J)", "Ry (1e-4 J)", "phi_pert"}


def test_criterion_7_perturbation(perturb_checks):
    ok, _ = split(perturb_checks, PT_HARD)
    assert len(ok) == 8
    assert_all(ok)


@pytest.mark.xfail(strict=True, reason=PT_REASON)
def test_criterion_7_reference_couplings(perturb_checks):
    _, hard = split(perturb_checks, PT_HARD)
    assert len(hard) == 4
    assert_all(hard)


# ---------------------------------------------------------------- 8

def test_criterion_8_finite_u():
    res = run_sweep(recipes.finite_u_sweep())
    assert not res.failed
    checks = anchors.check_finite_u(res.to_dict()["records"])
    record_checks(8, checks)
    assert_all(checks)


# ---------------------------------------------------------------- 9

def _property_checks():
    out = []
    rng = np.random.default_rng(9)
    oracles = [
        LatticeSpec(nx=3, ny=3, n_particles=4, n_phi=1.3, j_pin=0.7, pin_sites=((0, 0), (1, 2))),
        LatticeSpec(nx=4, ny=3, n_particles=6, n_phi=1.5, j_pin=0.4, pin_sites=((0, 0), (2, 1))),
        LatticeSpec(nx=3, ny=3, n_particles=3, n_max=3, u=1.5, v=0.3, n_phi=2.2, j_pin=0.6,
                    pin_sites=((0, 0), (1, 1))),
    ]
    worst = 0.0
    for spec in oracles:
        h = build(spec)
        ref, _ = eig.dense_lowest(h, 4)
        worst = max(worst, float(np.abs(eig.lowest(h, k=4).energies - ref).max()))
    out.append(Check(9, "Lanczos vs dense (dim <= 4000)", worst, "<= 1e-9", worst <= 1e-9))

    spec = oracles[2]
    h = build(spec)
    herm = h.hermiticity_error()
    out.append(Check(9, "hermiticity error", herm, "< 1e-14", herm < 1e-14))
    ref, _ = brute_force_matrix(spec)
    diff = float(np.abs(h.to_dense() - ref).max())
    out.append(Check(9, "matrix vs state-by-state build", diff, "< 1e-13", diff < 1e-13))
    b = basis_for(spec)
    coo = h.to_sparse().tocoo()
    n = b.occupations().sum(axis=1)
    out.append(Check(9, "number conservation", bool(np.all(n[coo.row] == n[coo.col])), "True",
                     bool(np.all(n[coo.row] == n[coo.col]))))

    from vortex_ed.hamiltonian import build_from_bonds
    spec = oracles[0]
    b = basis_for(spec)
    bonds = build_bonds(spec)
    w1 = np.linalg.eigvalsh(build_from_bonds(b, bonds).to_dense())
    w2 = np.linalg.eigvalsh(build_from_bonds(b, gauge_transform(bonds, rng.uniform(0, 7, spec.n_sites))).to_dense())
    g = float(np.abs(w1 - w2).max())
    out.append(Check(9, "gauge invariance of spectrum", g, "< 1e-9", g < 1e-9))

    w, v = np.linalg.eigh(build(spec, basis=b).to_dense())
    psi = v[:, 0]
    zs = abs(float(ob.vorticity_map(spec, b, psi, bonds).values.sum()))
    out.append(Check(9, "raw vorticity zero-sum", zs, "< 1e-9", zs < 1e-9))
    inflow = float(np.abs(ob.net_inflow(bonds, ob.bond_currents(b, psi, bonds), spec.n_sites)).max())
    out.append(Check(9, "current continuity", inflow, "< 1e-9", inflow < 1e-9))

    rdm = ob.two_site_rdm(b, psi, *spec.pins)
    ev = np.linalg.eigvalsh(rdm.matrix)
    tr = abs(np.trace(rdm.matrix) - 1)
    ok = tr < 1e-12 and ev.min() > -1e-12
    out.append(Check(9, "RDM trace / PSD", (float(tr), float(ev.min())), "|tr - 1| < 1e-12, min eig > -1e-12", ok))
    e = ob.eof(ob.TwoSiteRDM.from_pure(ob.bell_state(0.4)))
    out.append(Check(9, "EoF(Bell)", e, "1 within 1e-12", abs(e - 1) < 1e-12))

    fb = FockBasis(6, 3, 3)
    rt = all(fb.rank(fb.unrank(i)) == i for i in range(fb.dim))
    out.append(Check(9, "rank/unrank round trip", rt, "True", rt))

    f = spinfit.fit(spinfit.spin_spectrum(0.063, 0.22, -13.3))
    err = max(abs(f.f_xx_abs - 0.063), abs(f.f_zz - 0.22), abs(f.c + 13.3))
    out.append(Check(9, "fit / spin_spectrum round trip", err, "< 1e-12", err < 1e-12))

    t = np.linspace(0, 8, 100)
    traces = [ob.raman_trace(rdm, 0.5 * np.exp(1j * th), 0.0, t) for th in (0.0, math.pi / 2)]
    fit = ob.raman_fit(traces)
    err = max(abs(fit.r - abs(rdm.coherence)),
              abs(np.angle(np.exp(1j * (fit.phi_prime - np.angle(rdm.coherence))))))
    out.append(Check(9, "raman round trip", err, "< 1e-8", err < 1e-8))

    bell = ob.TwoSiteRDM.from_pure(ob.bell_state(math.pi))
    po = ob.parity_projection(bell, bell)
    ents = [ob.cut_entropy(s, 2, 4) for s in (po.state_even, po.state_odd)]
    ok = np.allclose(po.probabilities, (0.5, 0.5)) and np.allclose(ents, 1.0)
    out.append(Check(9, "parity projection of Bell pairs", (tuple(po.probabilities), tuple(ents)),
                     "(0.5, 0.5), cut entropy 1", bool(ok)))

    triv = eig.lowest(sp.csr_matrix(np.diag([0.0, 1.0])), k=1).energies[0]
    out.append(Check(9, "diag(0, 1) ground", float(triv), "0", abs(triv) < 1e-12))
    return out


def test_criterion_9_property_suite():
    checks = _property_checks()
    record_checks(9, checks)
    assert_all(checks)
