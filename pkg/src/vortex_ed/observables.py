"""
Measurements on eigenstates.

Every function taking ``states`` accepts either one normalised vector of
shape ``(dim,)`` or an orthonormal set of shape ``(dim, g)`` spanning a
degenerate level. In the second case the result is the equal-weight average
over the set, which does not depend on the chosen basis of the level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import FockBasis
from .lattice import Bond, LatticeSpec, pin_adjacent_plaquettes, plaquettes

PSD_TOL = 1e-10
PHASE_LAW_MIN_CORR = 1e-6

SIGMA_Y2 = np.array([[0, 0, 0, -1],
                     [0, 0, 1, 0],
                     [0, 1, 0, 0],
                     [-1, 0, 0, 0]], dtype=complex)


def _columns(states) -> np.ndarray:
    s = np.asarray(states)
    return s[:, None] if s.ndim == 1 else s


def hop_expectation(basis: FockBasis, states, i: int, j: int) -> complex:
    """Group-averaged <a†_i a_j>."""
    v = _columns(states)
    src, dst, amp = basis.hop(i, j)
    vals = np.einsum("ik,i,ik->k", v[dst].conj(), amp, v[src])
    return complex(vals.mean())


def density(basis: FockBasis, states, site: int) -> float:
    v = _columns(states)
    occ = basis.site_occupation(site).astype(float)
    return float(np.mean(np.einsum("ik,i,ik->k", v.conj(), occ, v).real))


def correlation(basis: FockBasis, states, s1: int, s2: int) -> complex:
    """<a†_{s1} a_{s2}>; for s1 == s2 this is the site density."""
    if s1 == s2:
        return complex(density(basis, states, s1))
    return hop_expectation(basis, states, s1, s2)


# -- currents and vorticity ---------------------------------------------------

def bond_current(basis: FockBasis, states, bond: Bond) -> float:
    """Current j = -dH/dA on ``bond``, oriented from source to target.

    With the hopping term -J_b e^{iA} a†_target a_source this is
    -2 J_b Im(e^{iA} <a†_target a_source>).
    """
    if bond.strength == 0.0:
        return 0.0
    z = np.exp(1j * bond.phase) * hop_expectation(basis, states, bond.target, bond.source)
    return float(-2.0 * bond.strength * z.imag)


def bond_currents(basis: FockBasis, states, bonds: Sequence[Bond]) -> np.ndarray:
    return np.array([bond_current(basis, states, b) for b in bonds])


def net_inflow(bonds: Sequence[Bond], currents, n_sites: int) -> np.ndarray:
    """Net current into every site."""
    flow = np.zeros(n_sites)
    for b, c in zip(bonds, currents):
        flow[b.target] += c
        flow[b.source] -= c
    return flow


@dataclass
class VorticityMap:
    """Per-plaquette curl of the bond current, indexed by lower-left corner."""

    nx: int
    ny: int
    values: np.ndarray
    background: float = 0.0
    subtracted: bool = False

    def grid(self) -> np.ndarray:
        """Values as an (ny, nx) array, row y."""
        return self.values.reshape(self.ny, self.nx)

    def subtract(self, background: float) -> "VorticityMap":
        return VorticityMap(self.nx, self.ny, self.values - background, background, True)

    def to_rows(self) -> list[dict]:
        return [{"plaquette": p, "x": p % self.nx, "y": p // self.nx, "vorticity": float(v)}
                for p, v in enumerate(self.values)]

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "values": [float(v) for v in self.values],
                "background": float(self.background), "subtracted": self.subtracted}


def vorticity_map(spec: LatticeSpec, basis: FockBasis, states, bonds: Sequence[Bond]) -> VorticityMap:
    """Counter-clockwise loop sum of bond currents around each plaquette (a = 1)."""
    cur = bond_currents(basis, states, bonds)
    vals = np.array([sum(sign * cur[k] for k, sign in p.bonds) for p in plaquettes(spec, bonds)])
    return VorticityMap(spec.nx, spec.ny, vals)


def background_vorticity(vmap: VorticityMap, spec: LatticeSpec) -> float:
    """Mean raw vorticity over plaquettes that do not touch a pin site."""
    near = pin_adjacent_plaquettes(spec)
    far = [p for p in range(len(vmap.values)) if p not in near]
    return float(np.mean(vmap.values[far]))


def analytic_background(p: float, n: float, n_phi: float, j: float = 1.0) -> float:
    """Lattice estimate -2 pi p n n_phi J of the background vorticity."""
    if p <= 0 or n <= 0:
        raise ValueError("p and n must be positive")
    return -2.0 * math.pi * p * n * n_phi * j


# -- phase law ----------------------------------------------------------------

def phase_law_m(corr: complex, n_phi: float) -> float:
    """Branch index m in {0, 1} with Arg c closest to pi n_phi / 2 + m pi (mod 2 pi).

    Arg c is only defined modulo 2 pi, so m is reduced modulo 2; otherwise the
    branch cut of ``np.angle`` would show up as a spurious jump. nan when |c| is
    too small.
    """
    if abs(corr) < PHASE_LAW_MIN_CORR:
        return float("nan")
    return float(round((np.angle(corr) - 0.5 * math.pi * n_phi) / math.pi) % 2)


def phase_law_residual(corr: complex, n_phi: float) -> float:
    """Distance (rad) of Arg c from the set {pi n_phi / 2 + m pi}; nan when |c| < 1e-6."""
    if abs(corr) < PHASE_LAW_MIN_CORR:
        return float("nan")
    d = np.angle(corr) - 0.5 * math.pi * n_phi
    return float(abs(d - math.pi * round(d / math.pi)))


def detect_jumps(params, ms) -> list[float]:
    """Midpoints between consecutive samples whose m differs (nan samples skipped)."""
    out = []
    prev = None
    for p, m in zip(params, ms):
        if np.isnan(m):
            continue
        if prev is not None and m != prev[1]:
            out.append(0.5 * (prev[0] + p))
        prev = (p, m)
    return out


# -- two-site reduced state ---------------------------------------------------

@dataclass
class TwoSiteRDM:
    """Reduced state of sites (s1, s2) in the basis |00>, |01>, |10>, |11> = |n_s1 n_s2>."""

    matrix: np.ndarray
    sites: tuple = (0, 1)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (4, 4):
            raise ValueError("two-site RDM must be 4x4")

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    @property
    def coherence(self) -> complex:
        """<a†_s1 a_s2> = <01|rho|10>."""
        return complex(self.matrix[1, 2])

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def check(self, tol: float = PSD_TOL) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > tol:
            raise ValueError("RDM is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol:
            raise ValueError(f"RDM trace {np.trace(m).real} != 1")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w.min() < -tol:
            raise ValueError(f"RDM not positive semidefinite (min eigenvalue {w.min():.3e})")

    @classmethod
    def from_pure(cls, psi) -> "TwoSiteRDM":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def bell_state(phi: float) -> np.ndarray:
    """(|10> + e^{i phi}|01>) / sqrt 2 in the |00>,|01>,|10>,|11> ordering."""
    return np.array([0.0, np.exp(1j * phi), 1.0, 0.0]) / math.sqrt(2.0)


def two_site_rdm(basis: FockBasis, states, s1: int, s2: int) -> TwoSiteRDM:
    """Partial trace over every site except ``s1`` and ``s2`` (hard-core only)."""
    if not basis.hardcore:
        raise ValueError("two-site RDM is only defined for hard-core bosons")
    if s1 == s2:
        raise ValueError("need two distinct sites")
    v = _columns(states)
    g = v.shape[1]
    n1 = basis.site_occupation(s1)
    n2 = basis.site_occupation(s2)
    mask = (1 << s1) | (1 << s2)
    rest = basis.codes & ~mask
    sectors = []
    for a in (0, 1):
        for b in (0, 1):
            idx = np.nonzero((n1 == a) & (n2 == b))[0]
            order = np.argsort(rest[idx], kind="stable")
            sectors.append((rest[idx][order], idx[order]))
    rho = np.zeros((4, 4), dtype=complex)
    for p, (rp, ip) in enumerate(sectors):
        for q, (rq, iq) in enumerate(sectors):
            if q < p:
                continue
            _, ia, ib = np.intersect1d(rp, rq, assume_unique=True, return_indices=True)
            val = np.sum(v[ip[ia]] * v[iq[ib]].conj()) / g
            rho[p, q] = val
            rho[q, p] = np.conj(val)
    return TwoSiteRDM(rho, (s1, s2))


def concurrence(rdm: TwoSiteRDM) -> float:
    """Wootters concurrence.

    With rho = W W^H, the square roots of the eigenvalues of rho rho~ are the
    singular values of W^T (sy x sy) W. This avoids taking square roots of
    round-off sized eigenvalues, which would cost eight digits for pure states.
    """
    rdm.check()
    p, v = np.linalg.eigh(rdm.matrix)
    w = v * np.sqrt(np.clip(p, 0.0, None))
    lam = np.linalg.svd(w.T @ SIGMA_Y2 @ w, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def eof(rdm: TwoSiteRDM) -> float:
    """Entanglement of formation from the concurrence."""
    c = min(concurrence(rdm), 1.0)
    return binary_entropy(0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c))))


def fidelity(rdm: TwoSiteRDM, phi: float) -> float:
    """<Psi|rho|Psi> with Psi = (|10> + e^{i phi}|01>) / sqrt 2."""
    psi = bell_state(phi)
    return float(np.vdot(psi, rdm.matrix @ psi).real)


# -- readout protocols ---------------------------------------------------------

@dataclass
class ReadoutTrace:
    times: np.ndarray
    occupancy: np.ndarray
    omega_eff: complex = 1.0


def raman_trace(rdm: TwoSiteRDM, omega_eff: complex, u: float, times) -> ReadoutTrace:
    """<n_1>(t) under H' = -(Omega a†_1 a_2 + h.c.) acting on the two pin sites.

    The hard-core two-site space has no doubly occupied site, so ``u`` is inert.
    """
    times = np.asarray(times, dtype=float)
    h = np.zeros((4, 4), dtype=complex)
    h[2, 1] = -omega_eff
    h[1, 2] = -np.conj(omega_eff)
    w, q = np.linalg.eigh(h)
    n1 = np.diag([0.0, 0.0, 1.0, 1.0])
    rho_e = q.conj().T @ rdm.matrix @ q
    n1_e = q.conj().T @ n1 @ q
    occ = np.empty(times.size)
    for k, t in enumerate(times):
        ph = np.exp(-1j * w * t)
        rt = (ph[:, None] * rho_e) * ph.conj()[None, :]
        occ[k] = np.trace(n1_e @ rt).real
    return ReadoutTrace(times, occ, complex(omega_eff))


@dataclass
class RamanFit:
    r: float
    phi_prime: float
    defined: bool
    note: str = ""


def raman_fit(traces: Sequence[ReadoutTrace], noise_floor: float = 1e-9) -> RamanFit:
    """Recover (r, phi') with r e^{i phi'} = <a†_1 a_2> from Raman traces.

    Each trace is fitted to a + b sin^2(|Omega| t) - s sin(2|Omega| t), where
    s = r sin(phi' + theta') and theta' = Arg Omega. A single trace fixes only
    ``s``; two traces with different theta' fix both r and phi'.
    """
    if isinstance(traces, ReadoutTrace):
        traces = [traces]
    rows, rhs = [], []
    for tr in traces:
        om = abs(tr.omega_eff)
        th = np.angle(tr.omega_eff)
        design = np.column_stack([np.ones_like(tr.times), np.sin(om * tr.times) ** 2,
                                  -np.sin(2 * om * tr.times)])
        coef, *_ = np.linalg.lstsq(design, tr.occupancy, rcond=None)
        # s = r sin(phi') cos(theta') + r cos(phi') sin(theta') = A cos th + B sin th
        rows.append([math.cos(th), math.sin(th)])
        rhs.append(coef[2])
    rows, rhs = np.array(rows), np.array(rhs)
    if np.max(np.abs(rhs)) < noise_floor:
        return RamanFit(0.0, float("nan"), False, "amplitude below noise floor")
    if np.linalg.matrix_rank(rows, tol=1e-9) < 2:
        s = float(rhs[0])
        return RamanFit(abs(s), float("nan"), False, "single theta' setting: only r sin(phi'+theta') is identified")
    (a, b), *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    # a = r sin(phi'), b = r cos(phi')
    return RamanFit(float(math.hypot(a, b)), float(math.atan2(a, b)), True)


def tomography_offdiag(x, purity: float, tol: float = PSD_TOL) -> float:
    """|y| from the populations x and the purity, using Tr rho^2 = |y|^2 + sum x^2.

    Assumes the only coherence is between |01> and |10> (counted twice).
    """
    x = np.asarray(x, dtype=float)
    if abs(x.sum() - 1.0) > 1e-8:
        raise ValueError("populations must sum to 1")
    rad = 0.5 * (purity - float(np.sum(x * x)))
    if rad < -tol:
        raise ValueError(f"inconsistent populations and purity (radicand {rad:.3e})")
    return math.sqrt(max(rad, 0.0))


@dataclass
class ParityOutcome:
    probabilities: tuple[float, float]
    rho_even: np.ndarray | None
    rho_odd: np.ndarray | None
    state_even: np.ndarray | None = field(default=None)
    state_odd: np.ndarray | None = field(default=None)


def _pure_vector(rho: np.ndarray, tol: float = 1e-10):
    w, v = np.linalg.eigh(rho)
    if abs(w[-1] - 1.0) > tol:
        return None
    psi = v[:, -1]
    k = int(np.argmax(np.abs(psi) > 1e-12))
    return psi * np.exp(-1j * np.angle(psi[k]))


def parity_projection(rdm_a: TwoSiteRDM, rdm_b: TwoSiteRDM) -> ParityOutcome:
    """Measure the parity of n_1 + n_1' on two copies of the pin pair.

    Qubits are ordered (1, 1', 2, 2') with qubit 1 the most significant bit.
    Pure post-measurement states are returned with their first nonzero
    amplitude made real and positive.
    """
    joint = np.kron(rdm_a.matrix, rdm_b.matrix).reshape([2] * 8)
    # input qubit order (1, 2, 1', 2') -> (1, 1', 2, 2')
    perm = [0, 2, 1, 3]
    joint = joint.transpose(perm + [p + 4 for p in perm]).reshape(16, 16)
    bits = np.array([[(i >> (3 - q)) & 1 for q in range(4)] for i in range(16)])
    even = ((bits[:, 0] + bits[:, 1]) % 2 == 0).astype(float)
    out = []
    for proj in (np.diag(even), np.diag(1.0 - even)):
        m = proj @ joint @ proj
        p = float(np.trace(m).real)
        out.append((p, m / p if p > 1e-14 else None))
    (pe, re_), (po, ro) = out
    return ParityOutcome((pe, po), re_, ro,
                         _pure_vector(re_) if re_ is not None else None,
                         _pure_vector(ro) if ro is not None else None)


def cut_entropy(psi, n_left: int, n_qubits: int) -> float:
    """Von Neumann entropy (bits) of the first ``n_left`` qubits of a pure state."""
    psi = np.asarray(psi, dtype=complex).reshape(2 ** n_left, 2 ** (n_qubits - n_left))
    s = np.linalg.svd(psi, compute_uv=False) ** 2
    s = s[s > 1e-15]
    return float(-np.sum(s * np.log2(s)))
