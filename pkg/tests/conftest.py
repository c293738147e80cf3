import itertools

import numpy as np
import pytest

from vortex_ed.lattice import LatticeSpec, build_bonds


def brute_force_matrix(spec: LatticeSpec):
    """Dense H built state by state from occupation tuples (independent of fock/hamiltonian).

    Returns (matrix, list of occupation tuples in the package's basis order).
    """
    n, N, m = spec.n_sites, spec.n_particles, spec.n_max
    states = [s for s in itertools.product(range(m + 1), repeat=n) if sum(s) == N]
    # package order: code = sum occ_i (m+1)^i, ascending
    states.sort(key=lambda s: sum(k * (m + 1) ** i for i, k in enumerate(s)))
    where = {s: i for i, s in enumerate(states)}
    h = np.zeros((len(states), len(states)), dtype=complex)
    bonds = build_bonds(spec)
    for a, s in enumerate(states):
        occ = np.array(s, float)
        h[a, a] -= spec.mu * N
        if spec.u:
            h[a, a] += spec.u * np.sum(occ * (occ - 1))
        for b in bonds:
            h[a, a] += spec.v * occ[b.source] * occ[b.target]
            for to, frm, c in ((b.target, b.source, -b.strength * np.exp(1j * b.phase)),
                               (b.source, b.target, -b.strength * np.exp(-1j * b.phase))):
                if s[frm] == 0 or s[to] == m:
                    continue
                t = list(s)
                amp = np.sqrt(t[frm] * (t[to] + 1))
                t[frm] -= 1
                t[to] += 1
                h[where[tuple(t)], a] += c * amp
    return h, states


@pytest.fixture(scope="session")
def oracle_spec():
    """3x3 torus, four hard-core bosons: dimension 126."""
    return LatticeSpec(nx=3, ny=3, n_particles=4, n_phi=1.3, j_pin=0.7, pin_sites=((0, 0), (1, 2)))


@pytest.fixture(scope="session")
def soft_spec():
    return LatticeSpec(nx=3, ny=3, n_particles=3, n_max=3, u=2.5, v=0.4, mu=0.3, n_phi=0.8,
                       j_pin=0.5, pin_sites=((0, 0), (2, 1)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


# acceptance lines, filled by test_acceptance.py and printed after the run
ACCEPTANCE = {}


def record_checks(criterion, checks):
    ACCEPTANCE.setdefault(criterion, []).extend(checks)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        failed = [c for c in checks if not c.passed]
        status = "PASS" if not failed else "FAIL"
        extra = "" if not failed else "  failing: " + "; ".join(c.name for c in failed)
        tr.write_line(f"criterion {crit}: {status} ({len(checks) - len(failed)}/{len(checks)} checks){extra}")
    tr.write_line("")
    for crit in sorted(ACCEPTANCE):
        for c in ACCEPTANCE[crit]:
            tr.write_line("  " + c.line())
