"""
Sparse matrix of the gauged Bose-Hubbard Hamiltonian

    H = -sum_b J_b (e^{i A_b} a†_t a_s + h.c.) + U sum n(n-1) + V sum_<st> n_s n_t - mu N

on a fixed-particle-number :class:`~vortex_ed.fock.FockBasis`.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis
from .lattice import Bond, LatticeSpec, build_bonds

# explicit storage above this many stored entries switches to matrix-free apply
DEFAULT_MAX_NNZ = 60_000_000


class SparseHermitian:
    """Hermitian operator on a basis, stored as CSR or applied matrix-free.

    Row-partitioned ``matvec`` evaluates each block independently and
    concatenates them, so the result does not depend on the worker count.
    """

    def __init__(self, dim: int, matrix: sp.csr_matrix | None = None,
                 diag: np.ndarray | None = None, hops=None, basis: FockBasis | None = None):
        self.dim = dim
        self.matrix = matrix
        self._diag = diag
        self._hops = hops
        self._basis = basis
        self._norm = None

    @property
    def explicit(self) -> bool:
        return self.matrix is not None

    @property
    def dtype(self):
        return np.complex128

    @property
    def shape(self):
        return (self.dim, self.dim)

    def diagonal(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.diagonal().real
        return self._diag

    def matvec(self, x: np.ndarray, workers: int = 1) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[0] != self.dim:
            raise ValueError(f"vector length {x.shape[0]} != dim {self.dim}")
        if self.matrix is None:
            return self._matfree(x)
        if workers <= 1 or self.dim < 4096:
            return self.matrix @ x
        edges = np.linspace(0, self.dim, workers + 1).astype(int)
        blocks = [self.matrix[a:b] for a, b in zip(edges[:-1], edges[1:])]
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda blk: blk @ x, blocks))
        return np.concatenate(parts)

    __matmul__ = matvec

    def _matfree(self, x: np.ndarray) -> np.ndarray:
        y = self._diag * x if x.ndim == 1 else self._diag[:, None] * x
        for i, j, coef in self._hops:
            src, dst, amp = self._basis.hop(i, j)
            w = coef * amp
            # a†_i a_j is injective, so src and dst hold no repeated rows
            if x.ndim == 1:
                y[dst] += w * x[src]
                y[src] += np.conj(w) * x[dst]
            else:
                y[dst] += w[:, None] * x[src]
                y[src] += np.conj(w)[:, None] * x[dst]
        return y

    def matvec_upper(self, x: np.ndarray) -> np.ndarray:
        """Apply H using only the upper triangle plus its conjugate transpose."""
        up = sp.triu(self.to_sparse(), k=1, format="csr")
        return up @ x + up.conj().T @ x + self.diagonal() * x

    def to_sparse(self) -> sp.csr_matrix:
        if self.matrix is not None:
            return self.matrix
        rows, cols, vals = [np.arange(self.dim)], [np.arange(self.dim)], [self._diag.astype(complex)]
        for i, j, coef in self._hops:
            src, dst, amp = self._basis.hop(i, j)
            w = coef * amp
            rows += [dst, src]
            cols += [src, dst]
            vals += [w, np.conj(w)]
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def norm_estimate(self) -> float:
        """Infinity-norm bound (max absolute row sum)."""
        if self._norm is None:
            m = self.to_sparse()
            self._norm = float(np.abs(m).sum(axis=1).max()) if self.dim else 0.0
        return self._norm

    def hermiticity_error(self) -> float:
        m = self.to_sparse()
        diff = m - m.conj().T
        scale = max(abs(m).max(), 1e-300)
        return float(abs(diff).max() / scale) if diff.nnz else 0.0

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.vdot(psi, self.matvec(psi)).real)


def hop_terms(bonds: Sequence[Bond]):
    """(i, j, coefficient of a†_i a_j) for the forward half of every bond."""
    return [(b.target, b.source, -b.strength * np.exp(1j * b.phase))
            for b in bonds if b.strength != 0.0]


def diagonal_energy(basis: FockBasis, bonds: Sequence[Bond], u: float | None,
                    v: float, mu: float) -> np.ndarray:
    diag = np.full(basis.dim, -mu * basis.n_particles, dtype=float)
    if not basis.hardcore and u:
        occ = basis.occupations().astype(float)
        diag += u * np.sum(occ * (occ - 1.0), axis=1)
    if v:
        for b in bonds:
            diag += v * basis.site_occupation(b.source) * basis.site_occupation(b.target)
    return diag


def build_from_bonds(basis: FockBasis, bonds: Sequence[Bond], u: float | None = None,
                     v: float = 0.0, mu: float = 0.0,
                     max_nnz: int = DEFAULT_MAX_NNZ) -> SparseHermitian:
    """Hamiltonian for an arbitrary bond list on ``basis``."""
    diag = diagonal_energy(basis, bonds, u, v, mu)
    hops = hop_terms(bonds)
    counts = []
    for i, j, _ in hops:
        ni, nj = basis.site_occupation(i), basis.site_occupation(j)
        counts.append(int(np.count_nonzero((nj > 0) & (ni < basis.n_max))))
    nnz = basis.dim + 2 * sum(counts)
    if nnz > max_nnz:
        return SparseHermitian(basis.dim, diag=diag, hops=hops, basis=basis)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128)
    rows[:basis.dim] = cols[:basis.dim] = np.arange(basis.dim)
    vals[:basis.dim] = diag
    k = basis.dim
    for i, j, coef in hops:
        src, dst, amp = basis.hop(i, j)
        n = len(src)
        w = coef * amp
        rows[k:k + n], cols[k:k + n], vals[k:k + n] = dst, src, w
        k += n
        rows[k:k + n], cols[k:k + n], vals[k:k + n] = src, dst, np.conj(w)
        k += n
    m = sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))
    m.sum_duplicates()
    return SparseHermitian(basis.dim, matrix=m)


def basis_for(spec: LatticeSpec, **kwargs) -> FockBasis:
    return FockBasis(spec.n_sites, spec.n_particles, spec.n_max, **kwargs)


def build(spec: LatticeSpec, basis: FockBasis | None = None, bonds: Sequence[Bond] | None = None,
          max_nnz: int = DEFAULT_MAX_NNZ) -> SparseHermitian:
    """Matrix of H for ``spec`` in its fixed-N sector."""
    if basis is None:
        basis = basis_for(spec)
    if basis.n_sites != spec.n_sites or basis.n_max != spec.n_max or basis.n_particles != spec.n_particles:
        raise ValueError(f"{basis!r} does not match the lattice spec")
    if bonds is None:
        bonds = build_bonds(spec)
    return build_from_bonds(basis, bonds, u=spec.u, v=spec.v, mu=spec.mu, max_nnz=max_nnz)


def build_unpinned(spec: LatticeSpec, basis: FockBasis | None = None,
                   max_nnz: int = DEFAULT_MAX_NNZ) -> SparseHermitian:
    """H with every pin-incident bond switched off (the J_pin = 0 reference)."""
    return build(replace(spec, j_pin=0.0), basis=basis, max_nnz=max_nnz)


def operator_hop(basis: FockBasis, i: int, j: int) -> sp.csr_matrix:
    """Sparse matrix of a†_i a_j."""
    src, dst, amp = basis.hop(i, j)
    return sp.csr_matrix((amp.astype(complex), (dst, src)), shape=(basis.dim, basis.dim))


def default_workers() -> int:
    env = os.environ.get("VORTEX_ED_THREADS")
    return max(1, int(env)) if env else 1
