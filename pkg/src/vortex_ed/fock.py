"""
Occupation-number basis at fixed particle number.

States are packed into integers with base ``n_max + 1`` (site 0 is the least
significant digit), so hard-core states are plain bitmasks. The basis is kept
sorted by code, which is lexicographic order read from the last site down.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

DEFAULT_MAX_DIM = 20_000_000


class CapacityError(RuntimeError):
    """Requested basis exceeds the configured dimension limit."""


@lru_cache(maxsize=None)
def sector_count(n_sites: int, n_particles: int, n_max: int) -> int:
    """Number of occupation vectors on ``n_sites`` with the given total and cap."""
    if n_particles < 0:
        return 0
    if n_sites == 0:
        return 1 if n_particles == 0 else 0
    if n_max == 1:
        return math.comb(n_sites, n_particles)
    return sum(sector_count(n_sites - 1, n_particles - k, n_max)
               for k in range(min(n_max, n_particles) + 1))


class FockBasis:
    """Sorted basis of one particle-number sector.

    Parameters
    ----------
    n_sites, n_particles, n_max : int
        Sector definition; ``n_max == 1`` gives hard-core bosons.
    max_dim : int
        Raise :class:`CapacityError` above this dimension.
    """

    def __init__(self, n_sites: int, n_particles: int, n_max: int = 1,
                 max_dim: int = DEFAULT_MAX_DIM):
        if not 0 <= n_particles <= n_max * n_sites:
            raise ValueError(f"no states with {n_particles} bosons on {n_sites} sites (n_max={n_max})")
        self.n_sites = n_sites
        self.n_particles = n_particles
        self.n_max = n_max
        self.base = n_max + 1
        if self.base ** n_sites >= 2 ** 63:
            raise CapacityError("state codes do not fit in 64 bits")
        dim = sector_count(n_sites, n_particles, n_max)
        if dim > max_dim:
            raise CapacityError(f"dimension {dim} exceeds limit {max_dim}")
        self.codes = self._generate()
        self.dim = len(self.codes)
        assert self.dim == dim
        self._powers = self.base ** np.arange(n_sites, dtype=np.int64)
        self._occ = None

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"FockBasis(n_sites={self.n_sites}, n_particles={self.n_particles}, n_max={self.n_max}, dim={self.dim})"

    @property
    def hardcore(self) -> bool:
        return self.n_max == 1

    def _generate(self) -> np.ndarray:
        n, N, m = self.n_sites, self.n_particles, self.n_max
        if m == 1:
            codes = np.fromiter(
                (sum(1 << i for i in c) for c in itertools.combinations(range(n), N)),
                dtype=np.int64, count=math.comb(n, N))
            return np.sort(codes)
        codes = np.zeros(1, dtype=np.int64)
        used = np.zeros(1, dtype=np.int64)
        for site in range(n):
            left = n - site - 1
            place = np.int64(self.base) ** site
            new_codes, new_used = [], []
            for k in range(m + 1):
                total = used + k
                # keep partial states that can still reach exactly N
                ok = (total <= N) & (total + left * m >= N)
                new_codes.append(codes[ok] + k * place)
                new_used.append(total[ok])
            codes = np.concatenate(new_codes)
            used = np.concatenate(new_used)
        return np.sort(codes)

    # -- occupations -----------------------------------------------------

    def occupations(self) -> np.ndarray:
        """(dim, n_sites) array of site occupancies."""
        if self._occ is None:
            self._occ = self.occupation_of(self.codes)
        return self._occ

    def occupation_of(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        return ((codes[..., None] // self._powers) % self.base).astype(np.int8)

    def site_occupation(self, site: int) -> np.ndarray:
        return (self.codes // self._powers[site]) % self.base

    def encode(self, occ) -> int:
        occ = np.asarray(occ, dtype=np.int64)
        return int(occ @ self._powers)

    # -- ranking ---------------------------------------------------------

    def index(self, codes) -> np.ndarray:
        """Positions of ``codes`` in the basis (vectorised); raises on absent codes."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self.codes, codes)
        pos_c = np.minimum(pos, self.dim - 1)
        if not np.all(self.codes[pos_c] == codes):
            raise KeyError("state not in basis")
        return pos

    def rank(self, occ) -> int:
        """Index of an occupation vector without a lookup table.

        Hard-core states use the combinatorial number system; soft-core states
        count lexicographically smaller completions digit by digit.
        """
        occ = [int(k) for k in occ]
        if len(occ) != self.n_sites or sum(occ) != self.n_particles or max(occ, default=0) > self.n_max:
            raise KeyError(f"{occ} is not in this sector")
        if self.hardcore:
            r, k = 0, 0
            for p, bit in enumerate(occ):
                if bit:
                    k += 1
                    r += math.comb(p, k)
            return r
        r = 0
        remaining = self.n_particles
        for site in range(self.n_sites - 1, -1, -1):
            for d in range(occ[site]):
                r += sector_count(site, remaining - d, self.n_max)
            remaining -= occ[site]
        return r

    def unrank(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.dim:
            raise IndexError(i)
        return tuple(int(k) for k in self.occupation_of(self.codes[i]))

    # -- operators -------------------------------------------------------

    def hop(self, i: int, j: int):
        """Matrix elements of a†_i a_j over the whole basis.

        Returns ``(src, dst, amp)`` with ``<dst| a†_i a_j |src> = amp``.
        """
        if i == j:
            raise ValueError("hop needs two distinct sites")
        ni = self.site_occupation(i)
        nj = self.site_occupation(j)
        ok = (nj > 0) & (ni < self.n_max)
        src = np.nonzero(ok)[0]
        new = self.codes[src] + self._powers[i] - self._powers[j]
        dst = self.index(new)
        if self.hardcore:
            amp = np.ones(len(src))
        else:
            amp = np.sqrt(nj[src] * (ni[src] + 1.0))
        return src, dst, amp


def enumerate_basis(n_sites: int, n_particles: int, n_max: int = 1,
                    max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    return FockBasis(n_sites, n_particles, n_max, max_dim=max_dim)


def apply_hop(state, i: int, j: int, n_max: int = 1):
    """a†_i a_j on one occupation vector: ``(new_state, amplitude)`` or None."""
    if i == j:
        raise ValueError("hop needs two distinct sites")
    state = tuple(int(k) for k in state)
    if state[j] == 0 or state[i] == n_max:
        return None
    amp = math.sqrt(state[j] * (state[i] + 1))
    new = list(state)
    new[j] -= 1
    new[i] += 1
    return tuple(new), amp
