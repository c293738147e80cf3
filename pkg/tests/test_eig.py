import numpy as np
import pytest
import scipy.sparse as sp

from vortex_ed import eig
from vortex_ed.hamiltonian import build
from vortex_ed.lattice import LatticeSpec


def test_trivial_diagonal():
    sol = eig.lowest(sp.csr_matrix(np.diag([0.0, 1.0])), k=1)
    assert sol.energies[0] == pytest.approx(0.0, abs=1e-12)


ORACLES = [
    LatticeSpec(nx=3, ny=3, n_particles=4, n_phi=1.3, j_pin=0.7, pin_sites=((0, 0), (1, 2))),
    LatticeSpec(nx=3, ny=3, n_particles=4, n_phi=0.0, j_pin=1.0, pin_sites=((0, 0), (1, 1))),
    LatticeSpec(nx=4, ny=3, n_particles=6, n_phi=1.5, j_pin=0.4, pin_sites=((0, 0), (2, 1))),
    LatticeSpec(nx=3, ny=3, n_particles=3, n_max=3, u=1.5, v=0.3, n_phi=2.2, j_pin=0.6,
                pin_sites=((0, 0), (1, 1))),
    LatticeSpec(nx=3, ny=3, n_particles=4, n_max=2, u=4.0, n_phi=0.0, j_pin=0.2,
                pin_sites=((0, 0), (2, 1))),
]


@pytest.mark.parametrize("spec", ORACLES, ids=lambda s: f"{s.nx}x{s.ny}N{s.n_particles}m{s.n_max}")
def test_lanczos_matches_dense(spec):
    h = build(spec)
    assert h.dim <= 4000
    k = 6
    ref, _ = eig.dense_lowest(h, k)
    sol = eig.lowest(h, k=k)
    assert np.abs(sol.energies - ref).max() <= 1e-9
    v = sol.vectors
    assert np.abs(v.conj().T @ v - np.eye(k)).max() < 1e-10
    res = np.linalg.norm(np.column_stack([h.matvec(v[:, i]) for i in range(k)]) - v * sol.energies, axis=0)
    assert np.all(res <= 1e-10 * h.norm_estimate() * 100)
    assert np.all(np.diff(sol.energies) >= 0)


def test_degenerate_partners_found():
    # spectrum with an exact doublet below the rest; random unitary hides the structure
    rng = np.random.default_rng(3)
    d = np.concatenate([[-2.0, -2.0, -1.5], np.linspace(0, 5, 197)])
    q, _ = np.linalg.qr(rng.standard_normal((200, 200)) + 1j * rng.standard_normal((200, 200)))
    a = (q * d) @ q.conj().T
    a = 0.5 * (a + a.conj().T)
    sol = eig.lowest(a, k=1, complete_groups=True)
    assert sol.ground_degeneracy == 2
    sol = eig.lowest(a, k=2)
    assert sol.energies == pytest.approx([-2.0, -2.0], abs=1e-9)


def test_unpinned_ground_doublet():
    spec = LatticeSpec(n_phi=0.5, j_pin=0.0)
    sol = eig.lowest(build(spec), k=1, complete_groups=True)
    assert sol.ground_degeneracy == 2


def test_nondegenerate_ground_pinned():
    spec = LatticeSpec(n_phi=2.0, j_pin=0.6)
    sol = eig.lowest(build(spec), k=2)
    assert sol.degeneracy_groups[0] == [0]
    assert sol.gap() > eig.DEGENERACY_THRESHOLD


def test_seed_reproducible():
    h = build(ORACLES[0])
    a = eig.lowest(h, k=3, seed=7)
    b = eig.lowest(h, k=3, seed=7)
    assert np.array_equal(a.energies, b.energies)
    assert np.array_equal(a.vectors, b.vectors)


def test_krylov_monotone():
    h = build(ORACLES[2])
    prev = np.inf
    for m in range(2, 60, 4):
        low = eig.krylov_ritz(h, m, seed=1)[0]
        assert low <= prev + 1e-12
        prev = low


def test_degeneracy_split():
    assert eig.degeneracy_split([0.0, 1e-12, 1.0], 1e-8) == [[0, 1], [2]]
    assert eig.degeneracy_split([0.0, 1.0, 2.0], 1e-8) == [[0], [1], [2]]
    assert eig.degeneracy_split([], 1e-8) == []


def test_non_convergence_raises():
    h = build(ORACLES[2])
    with pytest.raises(eig.ConvergenceError) as err:
        eig.lowest(h, k=1, tol=1e-16, max_krylov=8, max_restarts=2, verify=False)
    assert err.value.residuals is not None
