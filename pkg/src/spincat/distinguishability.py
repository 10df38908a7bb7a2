"""Local-measurement superposition size.

A partition of the cluster counts toward D_LM when every part, on its own
reduced density matrices, discriminates the two superposition components
with Helstrom probability P > 1 - delta.  Tracing out sites is a quantum
channel, so the trace distance -- and hence P -- can only drop when a subset
shrinks.  The search therefore only ever needs the *minimal* good subsets:
any good part contains one, and the maximum part count equals the maximum
disjoint packing of minimal good subsets, with leftover sites absorbed into
an existing part (which stays good by the same monotonicity).
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import sparse


class SubsetTooLarge(ValueError):
    """Subset Hilbert-space dimension exceeds the configured cap."""


class Infeasible(RuntimeError):
    """Even the full cluster cannot discriminate the two states.

    d_lm signals this by returning a PartitionResult with n_parts == 0;
    callers that require a usable partition may raise this.
    """


def subset_mask(sites):
    m = 0
    for i in sites:
        m |= 1 << int(i)
    return m


def mask_sites(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass
class DlmOptions:
    max_subset_dim: int = 4096
    workers: int = 1
    max_sites: int = 20


@dataclass
class PartitionResult:
    parts: tuple            # bitmasks, pairwise disjoint, union = all sites
    n_parts: int
    per_part_probability: tuple
    delta: float
    full_cluster_probability: float
    cluster: object = field(default=None, repr=False)

    def site_lists(self):
        return [mask_sites(m) for m in self.parts]

    def to_json(self):
        return json.dumps({
            "n_parts": self.n_parts,
            "delta": self.delta,
            "parts": [list(s) for s in self.site_lists()],
            "per_part_probability": list(self.per_part_probability),
            "full_cluster_probability": self.full_cluster_probability,
        }, indent=2)


def _subset_sites(cluster, subset):
    if isinstance(subset, (int, np.integer)):
        sites = mask_sites(int(subset))
    else:
        sites = tuple(sorted(int(i) for i in subset))
    if not sites:
        raise ValueError("empty subset")
    if len(set(sites)) != len(sites) or sites[-1] >= cluster.n_sites:
        raise ValueError("invalid subset %r" % (sites,))
    return sites


def reduced_density_matrix(psi, subset, max_subset_dim=4096):
    """Partial trace over the complement of `subset` (site indices or mask).

    Sector basis states are grouped by their subset-restricted configuration:
    with A[r, c] = amplitude at (subset config r, complement config c), the
    reduced matrix is A A^dagger, accumulated sparsely so the complement
    dimension never materializes.
    """
    cluster = psi.cluster
    sites = _subset_sites(cluster, subset)
    two_s = cluster.two_s
    dims = [int(two_s[i]) + 1 for i in sites]
    dim_sub = 1
    for d in dims:
        dim_sub *= d
    if dim_sub > max_subset_dim:
        raise SubsetTooLarge(
            "subset dimension %d exceeds cap %d" % (dim_sub, max_subset_dim))
    comp = [i for i in range(cluster.n_sites) if i not in sites]
    digits = ((psi.basis.states.astype(np.int64) + two_s) // 2)
    rows = np.zeros(psi.basis.dim, dtype=np.int64)
    for i, d in zip(sites, dims):
        rows = rows * d + digits[:, i]
    cols = np.zeros(psi.basis.dim, dtype=np.int64)
    for i in comp:
        cols = cols * (int(two_s[i]) + 1) + digits[:, i]
    dim_comp = 1
    for i in comp:
        dim_comp *= int(two_s[i]) + 1
    A = sparse.coo_matrix((psi.amplitudes, (rows, cols)),
                          shape=(dim_sub, max(dim_comp, 1))).tocsr()
    rho = (A @ A.conj().T).toarray()
    return (rho + rho.conj().T) / 2.0


def discrimination_probability(psi1, psi2, subset, max_subset_dim=4096):
    """Helstrom success probability 1/2 + ||rho1 - rho2||_1 / 4 on a subset.

    The full cluster is handled by the pure-state formula
    1/2 + sqrt(1 - |<psi1|psi2>|^2) / 2, which needs no density matrix.
    """
    if psi1.cluster is not psi2.cluster:
        raise ValueError("states live on different clusters")
    sites = _subset_sites(psi1.cluster, subset)
    if len(sites) == psi1.cluster.n_sites:
        ov = abs(psi1.overlap(psi2))
        return 0.5 + 0.5 * np.sqrt(max(0.0, 1.0 - ov * ov))
    r1 = reduced_density_matrix(psi1, sites, max_subset_dim)
    r2 = reduced_density_matrix(psi2, sites, max_subset_dim)
    lam = np.linalg.eigvalsh(r1 - r2)
    return float(0.5 + 0.25 * np.sum(np.abs(lam)))


def _subset_dim(cluster, sites):
    d = 1
    for i in sites:
        d *= int(cluster.two_s[i]) + 1
    return d


def d_lm(psi1, psi2, delta=0.01, opts=None):
    """Largest number of parts in a partition whose every part discriminates
    the two states with probability above 1 - delta.

    Exact given the subset-dimension cap: minimal good subsets are found
    breadth-first by size (supersets of a found subset are pruned), then a
    memoized search over the remaining-sites bitmask packs a maximum number
    of disjoint minimal subsets.  Leftover sites join the lexicographically
    smallest part.  Reported probabilities are those of the minimal cores,
    which lower-bound the final parts' by monotonicity.
    """
    opts = opts or DlmOptions()
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    cluster = psi1.cluster
    if psi2.cluster is not cluster:
        raise ValueError("states live on different clusters")
    N = cluster.n_sites
    if N > opts.max_sites:
        raise ValueError("partition search capped at %d sites" % opts.max_sites)
    threshold = 1.0 - delta
    full_mask = (1 << N) - 1
    full_p = discrimination_probability(psi1, psi2, full_mask)

    minimal = []          # masks of minimal good subsets
    prob = {}             # mask -> evaluated probability
    for size in range(1, N):
        cands = []
        for sites in combinations(range(N), size):
            m = subset_mask(sites)
            if any(m & g == g for g in minimal):
                continue
            if _subset_dim(cluster, sites) > opts.max_subset_dim:
                continue
            cands.append((m, sites))
        if not cands:
            continue
        if opts.workers > 1:
            with ThreadPoolExecutor(opts.workers) as pool:
                ps = list(pool.map(
                    lambda ms: discrimination_probability(
                        psi1, psi2, ms[1], opts.max_subset_dim), cands))
        else:
            ps = [discrimination_probability(psi1, psi2, s, opts.max_subset_dim)
                  for _, s in cands]
        for (m, _), p in zip(cands, ps):
            prob[m] = p
            if p > threshold:
                minimal.append(m)

    by_site = [[] for _ in range(N)]
    for m in minimal:
        for i in mask_sites(m):
            by_site[i].append(m)

    memo = {}

    def pack(avail):
        """(count, parts) of the best disjoint packing within `avail`."""
        if avail == 0:
            return 0, ()
        if avail in memo:
            return memo[avail]
        pivot = (avail & -avail).bit_length() - 1
        best = pack(avail & ~(1 << pivot))  # pivot site left unpacked
        for m in by_site[pivot]:
            if m & avail == m:
                cnt, parts = pack(avail & ~m)
                if cnt + 1 > best[0]:
                    best = (cnt + 1, parts + (m,))
        memo[avail] = best
        return best

    count, parts = pack(full_mask)
    if count == 0:
        if full_p > threshold:
            return PartitionResult(parts=(full_mask,), n_parts=1,
                                   per_part_probability=(full_p,), delta=delta,
                                   full_cluster_probability=full_p,
                                   cluster=cluster)
        return PartitionResult(parts=(), n_parts=0, per_part_probability=(),
                               delta=delta, full_cluster_probability=full_p,
                               cluster=cluster)

    cores = sorted(parts, key=mask_sites)
    parts = list(cores)
    covered = 0
    for m in parts:
        covered |= m
    leftover = full_mask & ~covered
    if leftover:
        parts[0] |= leftover
    probs = []
    for core, m in zip(cores, parts):
        if m == full_mask or \
                _subset_dim(cluster, mask_sites(m)) <= opts.max_subset_dim:
            probs.append(discrimination_probability(psi1, psi2, m,
                                                    opts.max_subset_dim))
        else:
            probs.append(prob[core])  # lower bound via monotonicity
    return PartitionResult(parts=tuple(parts), n_parts=count,
                           per_part_probability=tuple(probs), delta=delta,
                           full_cluster_probability=full_p, cluster=cluster)
