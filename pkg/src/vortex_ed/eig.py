"""
Lowest eigenpairs of a Hermitian operator.

The solver is a thick-restart Lanczos iteration with full
reorthogonalisation. Converged vectors are locked and deflated; afterwards a
deflated verification run checks that no eigenvalue (typically a missing
partner of a degenerate level) lies below the ones already found.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEGENERACY_THRESHOLD = 1e-8
# working-basis memory cap in bytes
KRYLOV_MEMORY = 1_500_000_000


class ConvergenceError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class EigenSolution:
    energies: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    degeneracy_groups: list = field(default_factory=list)
    matvecs: int = 0

    def group_vectors(self, g: int = 0) -> np.ndarray:
        """Columns spanning degenerate group ``g`` (0 = ground manifold)."""
        return self.vectors[:, self.degeneracy_groups[g]]

    @property
    def ground(self) -> np.ndarray:
        return self.group_vectors(0)

    @property
    def ground_degeneracy(self) -> int:
        return len(self.degeneracy_groups[0])

    def gap(self) -> float:
        """Distance from the ground level to the next distinct level (nan if unknown)."""
        if len(self.degeneracy_groups) < 2:
            return float("nan")
        return float(self.energies[self.degeneracy_groups[1][0]] - self.energies[0])


def degeneracy_split(energies, threshold: float = DEGENERACY_THRESHOLD) -> list[list[int]]:
    """Group ascending energies into maximal runs with consecutive gaps below ``threshold``."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        return []
    groups = [[0]]
    for i in range(1, energies.size):
        if energies[i] - energies[i - 1] < threshold:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _as_apply(h):
    if hasattr(h, "matvec"):
        return h.matvec, h.dim
    return (lambda x: h @ x), h.shape[0]


def _norm_estimate(h) -> float:
    if hasattr(h, "norm_estimate"):
        return h.norm_estimate()
    m = np.asarray(abs(h).sum(axis=1)).ravel()
    return float(m.max()) if m.size else 0.0


def _coeffs(basis, w):
    # basis^H w without materialising the conjugated basis
    return (w.conj() @ basis).conj()


def _orth(w, basis, locked):
    """Classical Gram-Schmidt against ``locked`` then ``basis``.

    A second pass is made when the first removes most of the norm (DGKS test).
    """
    coeffs = np.zeros(basis.shape[1], dtype=complex)
    for sweep in range(2):
        before = np.linalg.norm(w)
        if locked is not None and locked.shape[1]:
            w = w - locked @ _coeffs(locked, w)
        if basis.shape[1]:
            c = _coeffs(basis, w)
            w = w - basis @ c
            coeffs += c
        if np.linalg.norm(w) > 0.7071 * before:
            break
    return w, coeffs


def _random_vector(rng, n, basis, locked):
    for _ in range(10):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v, _ = _orth(v, basis, locked)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            return v / nv
    return None


def _lanczos_run(apply, n, nwant, locked, rng, m, tol_abs, max_restarts, stats, v0=None,
                 stop_above=None):
    """Thick-restart Lanczos for the ``nwant`` lowest eigenpairs outside span(locked).

    With ``stop_above`` set, the run ends early once the lowest Ritz value
    minus its residual exceeds that value.
    """
    n_free = n - (locked.shape[1] if locked is not None else 0)
    nwant = min(nwant, n_free)
    m = min(m, n_free)
    if nwant <= 0:
        return np.zeros(0), np.zeros((n, 0), complex)
    V = np.zeros((n, m + 1), dtype=complex)
    T = np.zeros((m, m), dtype=complex)
    if v0 is not None:
        v, _ = _orth(np.asarray(v0, complex), V[:, :0], locked)
        nv = np.linalg.norm(v)
        v = v / nv if nv > 1e-8 else _random_vector(rng, n, V[:, :0], locked)
    else:
        v = _random_vector(rng, n, V[:, :0], locked)
    V[:, 0] = v
    p = 0
    keep = min(max(nwant + 10, m // 2), m - 1)
    best = None
    for restart in range(max_restarts + 1):
        beta = 0.0
        for j in range(p, m):
            w = apply(V[:, j])
            stats["matvecs"] += 1
            w, h = _orth(w, V[:, :j + 1], locked)
            T[:j + 1, j] = h
            T[j, :j + 1] = h.conj()
            T[j, j] = h[j].real
            beta = np.linalg.norm(w)
            if j + 1 == m:
                V[:, m] = w / beta if beta > 0 else 0.0
                break
            if beta <= 1e-12 * max(1.0, tol_abs):
                # invariant subspace: continue with a fresh orthogonal direction
                nxt = _random_vector(rng, n, V[:, :j + 1], locked)
                if nxt is None:
                    m = j + 1
                    beta = 0.0
                    break
                V[:, j + 1] = nxt
                beta = 0.0
            else:
                V[:, j + 1] = w / beta
        theta, Y = np.linalg.eigh(T[:m, :m])
        res = beta * np.abs(Y[m - 1, :nwant])
        best = res
        if stop_above is not None and theta[0] - res[0] > stop_above:
            return theta[:nwant], V[:, :m] @ Y[:, :nwant]
        if np.all(res <= tol_abs) or m >= n_free:
            X = V[:, :m] @ Y[:, :nwant]
            return theta[:nwant], X
        # thick restart on the lowest ``keep`` Ritz vectors
        k = min(keep, m - 1)
        V[:, :k] = V[:, :m] @ Y[:, :k]
        V[:, k] = V[:, m]
        T[:] = 0.0
        T[np.arange(k), np.arange(k)] = theta[:k]
        p = k
    raise ConvergenceError(f"Lanczos did not converge after {max_restarts} restarts", residuals=best)


def lowest(h, k: int = 1, tol: float = 1e-10, seed: int = 0, max_krylov: int = 500,
           max_restarts: int = 300, degeneracy_threshold: float = DEGENERACY_THRESHOLD,
           complete_groups: bool = False, verify: bool = True, v0=None) -> EigenSolution:
    """The ``k`` lowest eigenpairs of ``h``.

    Parameters
    ----------
    h : SparseHermitian or array-like
        Operator with ``matvec``/``dim`` or a square (sparse) matrix.
    k : int
        Number of eigenpairs requested.
    tol : float
        Residual tolerance relative to the infinity-norm estimate of ``h``.
    seed : int
        Seed of the start-vector generator; fixes the result bit for bit.
    complete_groups : bool
        Extend the result so the highest returned level includes all of its
        degenerate partners.
    verify : bool
        Run deflated Lanczos passes that add any missed lower eigenvalue.
    """
    apply, n = _as_apply(h)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    anorm = max(_norm_estimate(h), 1e-300)
    tol_abs = tol * anorm
    mem_cap = max(8, KRYLOV_MEMORY // (16 * n))
    stats = {"matvecs": 0}

    def work_dim(nwant):
        return int(min(max_krylov, n, mem_cap, max(40, 3 * nwant + 30)))

    locked = np.zeros((n, 0), dtype=complex)
    vals = np.zeros(0)
    start = v0
    while locked.shape[1] < k:
        need = k - locked.shape[1]
        th, X = _lanczos_run(apply, n, need, locked, rng, work_dim(need), tol_abs,
                             max_restarts, stats, v0=start)
        start = None
        locked = np.hstack([locked, X])
        vals = np.concatenate([vals, th])
        if X.shape[1] == 0:
            break

    if verify:
        while locked.shape[1] < n:
            top = vals.max()
            slack = max(10 * tol_abs, 1e-12)
            bound = top + degeneracy_threshold if complete_groups else top - slack
            th, X = _lanczos_run(apply, n, 1, locked, rng, work_dim(1), tol_abs, max_restarts,
                                 stats, stop_above=bound)
            if X.shape[1] == 0:
                break
            accept = th[0] < bound
            if not accept:
                break
            locked = np.hstack([locked, X])
            vals = np.concatenate([vals, th])
            if not complete_groups and locked.shape[1] > k:
                # drop the current highest to keep exactly k
                drop = int(np.argmax(vals))
                mask = np.ones(len(vals), bool)
                mask[drop] = False
                locked, vals = locked[:, mask], vals[mask]
                locked = _reorthonormalize(locked)

    energies, vectors, residuals = _rayleigh_ritz(apply, locked, stats)
    if np.any(residuals > 100 * tol_abs):
        raise ConvergenceError("final residuals above tolerance", residuals=residuals)
    groups = degeneracy_split(energies, degeneracy_threshold)
    return EigenSolution(energies, vectors, residuals, groups, matvecs=stats["matvecs"])


def _reorthonormalize(Q):
    q, _ = np.linalg.qr(Q)
    return q


def _rayleigh_ritz(apply, Q, stats):
    Q = _reorthonormalize(Q)
    HQ = np.column_stack([apply(Q[:, i]) for i in range(Q.shape[1])])
    stats["matvecs"] += Q.shape[1]
    S = (HQ.T @ Q.conj()).T
    S = 0.5 * (S + S.conj().T)
    theta, Y = np.linalg.eigh(S)
    X = Q @ Y
    R = HQ @ Y - X * theta
    return theta, X, np.linalg.norm(R, axis=0)


def krylov_ritz(h, m: int, seed: int = 0) -> np.ndarray:
    """Ritz values of a plain m-step Lanczos run (no restart), ascending."""
    apply, n = _as_apply(h)
    rng = np.random.default_rng(seed)
    m = min(m, n)
    V = np.zeros((n, m), dtype=complex)
    V[:, 0] = _random_vector(rng, n, V[:, :0], None)
    T = np.zeros((m, m), dtype=complex)
    for j in range(m):
        w, hcol = _orth(apply(V[:, j]), V[:, :j + 1], None)
        T[:j + 1, j] = hcol
        T[j, :j + 1] = hcol.conj()
        T[j, j] = hcol[j].real
        if j + 1 < m:
            b = np.linalg.norm(w)
            if b < 1e-12:
                m = j + 1
                break
            V[:, j + 1] = w / b
    return np.linalg.eigvalsh(T[:m, :m])


def dense_lowest(h, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Reference solution from a dense Hermitian eigendecomposition."""
    if hasattr(h, "to_dense"):
        a = h.to_dense()
    elif hasattr(h, "toarray"):
        a = h.toarray()
    else:
        a = np.asarray(h)
    w, v = np.linalg.eigh(a)
    if k is not None:
        w, v = w[:k], v[:, :k]
    return w, v
