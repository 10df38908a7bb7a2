"""Spin clusters and magnetization-sector product bases.

All spin projections are stored as doubled integers (2s, 2m) so that
half-integer arithmetic stays exact.  A sector basis is the ordered list of
product configurations (m_1, ..., m_N) with fixed total S_z = M, enumerated
lexicographically in the doubled-m tuples.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

# hard cap on the number of basis states materialized at once
DEFAULT_STATE_BUDGET = 200_000_000


class EmptySector(ValueError):
    """Requested sector is empty (parity or range violation)."""


class BudgetExceeded(RuntimeError):
    """Construction would exceed the configured state budget."""


def _as_two_s(s):
    """Convert a spin quantum number (float, int, or 'a/b' string) to 2s."""
    if isinstance(s, str):
        s = s.strip()
        if "/" in s:
            num, den = s.split("/")
            num, den = int(num), int(den)
            if den == 1:
                return 2 * num
            if den != 2:
                raise ValueError("spin denominator must be 1 or 2: %r" % s)
            return num
        s = float(s)
    two_s = 2 * s
    if abs(two_s - round(two_s)) > 1e-9 or two_s < 0:
        raise ValueError("spin must be a non-negative half-integer, got %r" % (s,))
    return int(round(two_s))


def format_half_integer(two_m):
    """Render a doubled integer as '3/2', '-1/2', '2', ..."""
    if two_m % 2 == 0:
        return str(two_m // 2)
    return "%d/2" % two_m


@dataclass(frozen=True)
class SpinSite:
    index: int
    s: float
    sublattice: str
    label: str = ""

    def __post_init__(self):
        two_s = _as_two_s(self.s)
        object.__setattr__(self, "s", two_s / 2.0)
        if self.sublattice not in ("A", "B"):
            raise ValueError("sublattice must be 'A' or 'B'")
        if self.index < 0:
            raise ValueError("site index must be >= 0")

    @property
    def two_s(self):
        return int(round(2 * self.s))


@dataclass(frozen=True)
class SpinCluster:
    name: str
    sites: tuple

    def __post_init__(self):
        sites = tuple(self.sites)
        object.__setattr__(self, "sites", sites)
        if len(sites) < 1:
            raise ValueError("cluster needs at least one site")
        if [st.index for st in sites] != list(range(len(sites))):
            raise ValueError("site indices must be contiguous from 0")
        if self.full_dimension > DEFAULT_STATE_BUDGET:
            raise BudgetExceeded(
                "full product dimension %d exceeds the state budget %d"
                % (self.full_dimension, DEFAULT_STATE_BUDGET))

    @property
    def n_sites(self):
        return len(self.sites)

    @property
    def two_s(self):
        return np.array([st.two_s for st in self.sites], dtype=np.int64)

    @property
    def s_total(self):
        """Sum of the s_i (max possible total spin)."""
        return int(self.two_s.sum()) / 2.0

    @property
    def full_dimension(self):
        return int(np.prod([st.two_s + 1 for st in self.sites], dtype=object))

    def sublattice_sites(self, which):
        return [st.index for st in self.sites if st.sublattice == which]

    @property
    def s_a_max(self):
        return sum(self.sites[i].s for i in self.sublattice_sites("A"))

    @property
    def s_b_max(self):
        return sum(self.sites[i].s for i in self.sublattice_sites("B"))

    def sublattice_signs(self):
        """+1 for A sites, -1 for B sites, as a length-N array."""
        return np.array([1 if st.sublattice == "A" else -1 for st in self.sites])


def _radix_weights(two_s):
    """Mixed-radix weights with site 0 most significant, so that the numeric
    code order coincides with lexicographic order of the digit tuples."""
    dims = np.asarray(two_s, dtype=np.uint64) + 1
    w = np.ones(len(dims), dtype=np.uint64)
    for i in range(len(dims) - 2, -1, -1):
        w[i] = w[i + 1] * dims[i + 1]
    return w


def sector_dimension(cluster, two_M):
    """Number of product states with total 2m = two_M, by convolution of the
    per-site multiplicity polynomials (no basis materialization)."""
    two_s = cluster.two_s
    total = int(two_s.sum())
    if (two_M + total) % 2 != 0 or abs(two_M) > total:
        raise EmptySector(
            "no states with 2M=%d for this cluster (range/parity)" % two_M)
    poly = np.array([1], dtype=object)
    for ts in two_s:
        poly = np.convolve(poly, np.ones(ts + 1, dtype=object))
    return int(poly[(two_M + total) // 2])


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of an S_z sector.

    states: (dim, N) int8 array of doubled m values, lexicographic order.
    codes:  (dim,) uint64 mixed-radix encoding of the digit tuples; strictly
            increasing, so configuration -> index is a searchsorted.
    """
    cluster: SpinCluster
    two_M: int
    states: np.ndarray = field(repr=False)
    codes: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.states.shape[0]

    @property
    def M(self):
        return self.two_M / 2.0

    def index_of(self, config_two_m):
        """Position of a configuration (tuple of doubled m) in the basis."""
        two_s = self.cluster.two_s
        digits = (np.asarray(config_two_m, dtype=np.int64) + two_s) // 2
        w = _radix_weights(two_s)
        code = np.uint64((digits.astype(np.uint64) * w).sum())
        pos = int(np.searchsorted(self.codes, code))
        if pos >= self.dim or self.codes[pos] != code:
            raise KeyError("configuration not in sector: %r" % (config_two_m,))
        return pos

    def lookup(self, codes):
        """Vectorized code -> index; -1 where a code is absent."""
        pos = np.searchsorted(self.codes, codes)
        pos[pos >= self.dim] = self.dim - 1
        ok = self.codes[pos] == codes
        out = np.where(ok, pos, -1)
        return out

    def state_hash(self):
        """Golden hash of the enumerated state list (reproducibility check)."""
        h = hashlib.sha256()
        h.update(np.int64(self.two_M).tobytes())
        h.update(np.ascontiguousarray(self.states).tobytes())
        return h.hexdigest()


def enumerate_sector(cluster, two_M, budget=DEFAULT_STATE_BUDGET):
    """Enumerate all product configurations with Sigma 2m_i = two_M.

    Iterative cartesian build over sites with prefix pruning: a partial sum is
    kept only if the remaining sites can still reach the target.
    """
    two_s = cluster.two_s
    N = len(two_s)
    total = int(two_s.sum())
    if (two_M + total) % 2 != 0 or abs(two_M) > total:
        raise EmptySector(
            "no states with 2M=%d for this cluster (range/parity)" % two_M)
    dim = sector_dimension(cluster, two_M)
    if dim > budget:
        raise BudgetExceeded("sector dimension %d exceeds budget %d" % (dim, budget))

    # suffix sums of attainable remaining 2m
    suff = np.concatenate([np.cumsum(two_s[::-1])[::-1][1:], [0]])

    partial = np.zeros((1, 0), dtype=np.int8)
    sums = np.zeros(1, dtype=np.int64)
    for i in range(N):
        vals = np.arange(-two_s[i], two_s[i] + 1, 2, dtype=np.int64)
        # extend: rows repeat per value, values tile per row
        new_sums = (sums[:, None] + vals[None, :]).ravel()
        keep = np.abs(two_M - new_sums) <= suff[i]
        n_old, n_val = len(sums), len(vals)
        rows = np.repeat(np.arange(n_old), n_val)[keep]
        col = np.tile(vals.astype(np.int8), n_old)[keep]
        partial = np.concatenate([partial[rows], col[:, None]], axis=1)
        sums = new_sums[keep]
    assert partial.shape[0] == dim, (partial.shape, dim)

    digits = (partial.astype(np.int64) + two_s[None, :]) // 2
    w = _radix_weights(two_s)
    codes = (digits.astype(np.uint64) * w[None, :]).sum(axis=1)
    # lexicographic build order is already ascending in the code
    assert codes.dtype == np.uint64
    return SectorBasis(cluster=cluster, two_M=two_M, states=partial, codes=codes)
