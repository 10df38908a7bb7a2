"""One- and two-spin correlations for eigenstates and two-component
superpositions, including inter-sector cross terms.

Everything is assembled from three ladder families per state,

    Wz[:, i] = s_iz |psi>   (same sector)
    Wp[:, i] = s_i+ |psi>   (sector M+1)
    Wm[:, i] = s_i- |psi>   (sector M-1)

so that any ordered product expectation <psi'| s_ic s_jd |psi> is a Gram
entry between two families.  Sector selection rules are structural: a block
(c, d) is only computed when its net ladder shift matches M1 - M2, so cross
terms vanish identically (not by cancellation) when they must.
"""

import csv
import functools
from dataclasses import dataclass, field

import numpy as np

from .basis import EmptySector, enumerate_sector, _radix_weights
from .operators import _ladder_coeff, subset_spin_squared
from .solver import QuantumState

_SHIFT = {"z": 0, "+": 1, "-": -1}
_ADJOINT = {"z": "z", "+": "-", "-": "+"}
# cartesian components in terms of ladder operators: s_alpha = sum_c T[alpha][c] s_c
_T = {
    "x": {"+": 0.5, "-": 0.5},
    "y": {"+": -0.5j, "-": 0.5j},
    "z": {"z": 1.0},
}
_AXES = ("x", "y", "z")


@functools.lru_cache(maxsize=256)
def _sector(cluster, two_M):
    return enumerate_sector(cluster, two_M)


def _family(basis, psi, kind):
    """Stacked vectors s_i^kind |psi| as a (dim', N) array in the neighbor
    sector basis; empty (0, N) when that sector does not exist."""
    cluster = basis.cluster
    two_s = cluster.two_s
    N = cluster.n_sites
    dtype = np.result_type(psi, np.float64)
    if kind == "z":
        return basis, basis.states.astype(np.float64) / 2.0 * psi[:, None]
    up = kind == "+"
    try:
        nb = _sector(cluster, basis.two_M + (2 if up else -2))
    except EmptySector:
        return None, np.zeros((0, N), dtype=dtype)
    W = np.zeros((nb.dim, N), dtype=dtype)
    w = _radix_weights(two_s)
    st = basis.states
    for i in range(N):
        ok = st[:, i] < two_s[i] if up else st[:, i] > -two_s[i]
        src = np.nonzero(ok)[0]
        if len(src) == 0:
            continue
        codes = nb.lookup(basis.codes[src] + w[i] if up
                          else basis.codes[src] - w[i])
        f = _ladder_coeff(two_s[i], st[src, i].astype(np.int64), up)
        W[codes, i] = f * psi[src]
    return nb, W


class _FamilySet:
    """Lazily computed ladder families of one state."""

    def __init__(self, state):
        self.basis = state.basis
        self.psi = state.amplitudes
        self._cache = {}

    def get(self, kind):
        if kind not in self._cache:
            self._cache[kind] = _family(self.basis, self.psi, kind)
        return self._cache[kind]


def _ladder_family_minus(basis, psi):
    """Convenience used by the eigensolver for <S^2> labeling."""
    return _family(basis, psi, "-")[1]


@dataclass
class CorrelationData:
    """b[3i+a] = <s_{i,a}>, C[3i+a, 3j+b] = Re <s_{i,a} s_{j,b}>
    (equal to the symmetrized correlator since spin components are Hermitian).
    """
    cluster: object
    b: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    subject: str = "component"

    @property
    def n_sites(self):
        return self.cluster.n_sites


@dataclass
class Superposition:
    """(|psi1> + e^{i phi} |psi2>) / sqrt(2)."""
    psi1: QuantumState
    psi2: QuantumState
    relative_phase: float = 0.0

    def __post_init__(self):
        if self.psi1.cluster is not self.psi2.cluster:
            raise ValueError("superposition components live on different clusters")
        if self.psi1.two_M == self.psi2.two_M:
            ov = abs(self.psi1.overlap(self.psi2))
            if ov >= 1e-10:
                raise ValueError(
                    "equal-M components must be orthogonal (|<1|2>|=%.2e)" % ov)

    @property
    def delta_two_M(self):
        return self.psi1.two_M - self.psi2.two_M


def _ordered_product_blocks(fam1, fam2, delta_M):
    """All nonzero blocks G[(c, d)][i, j] = <psi1| s_ic s_jd |psi2>,
    where the net shift of (c, d) must equal delta_M = M1 - M2."""
    blocks = {}
    for c in ("z", "+", "-"):
        for d in ("z", "+", "-"):
            if _SHIFT[c] + _SHIFT[d] != delta_M:
                continue
            b_left, Wl = fam1.get(_ADJOINT[c])   # s_ic^dagger applied to psi1
            b_right, Wr = fam2.get(d)
            if Wl.shape[0] == 0 or Wr.shape[0] == 0:
                continue
            assert b_left.two_M == b_right.two_M
            blocks[(c, d)] = Wl.conj().T @ Wr
    return blocks


def _single_op_cross(fam1, psi2, delta_M):
    """g[c][i] = <psi1| s_ic |psi2> for the ladder kinds with shift delta_M."""
    out = {}
    for c in ("z", "+", "-"):
        if _SHIFT[c] != delta_M:
            continue
        nb, Wl = fam1.get(_ADJOINT[c])
        if Wl.shape[0] == 0:
            continue
        out[c] = Wl.conj().T @ psi2
    return out


def _assemble_matrix(blocks, N, dtype=np.complex128):
    """3N x 3N ordered-product matrix from ladder blocks via the cartesian
    transform."""
    M = np.zeros((3 * N, 3 * N), dtype=dtype)
    for (c, d), G in blocks.items():
        for ai, alpha in enumerate(_AXES):
            tc = _T[alpha].get(c)
            if tc is None:
                continue
            for bi, beta in enumerate(_AXES):
                td = _T[beta].get(d)
                if td is None:
                    continue
                M[ai::3, bi::3] += (tc * td) * G
    return M


def _assemble_vector(g, N):
    v = np.zeros(3 * N, dtype=np.complex128)
    for c, arr in g.items():
        for ai, alpha in enumerate(_AXES):
            tc = _T[alpha].get(c)
            if tc is not None:
                v[ai::3] += tc * arr
    return v


def correlations_of_state(psi):
    """CorrelationData of a sector eigenstate.  Transverse one-spin averages
    are structurally zero (no same-sector ladder blocks exist for them)."""
    fam = _FamilySet(psi)
    N = psi.cluster.n_sites
    blocks = _ordered_product_blocks(fam, fam, 0)
    C = np.real(_assemble_matrix(blocks, N))
    g = _single_op_cross(fam, psi.amplitudes, 0)
    b = np.real(_assemble_vector(g, N))
    return CorrelationData(cluster=psi.cluster, b=b, C=C, subject="component")


def correlations_of_superposition(sup):
    """CorrelationData of (|psi1> + e^{i phi}|psi2>)/sqrt(2).

    <O>_Psi = (O_11 + O_22)/2 + Re[e^{i phi} O_12]; the ordered cross matrix
    A[ia, jb] = <psi1| s_ia s_jb |psi2> contributes (e^{i phi} A + h.c.)/2.
    """
    fam1, fam2 = _FamilySet(sup.psi1), _FamilySet(sup.psi2)
    N = sup.psi1.cluster.n_sites
    # ladder shifts are in units of one, sector labels in doubled units
    shift = sup.delta_two_M / 2.0

    d1 = correlations_of_state(sup.psi1)
    d2 = correlations_of_state(sup.psi2)
    C = 0.5 * (d1.C + d2.C)
    b = 0.5 * (d1.b + d2.b)

    if abs(shift) <= 2 and float(shift).is_integer():
        ph = np.exp(1j * sup.relative_phase)
        cross_blocks = _ordered_product_blocks(fam1, fam2, int(shift))
        if cross_blocks:
            A = _assemble_matrix(cross_blocks, N)
            C = C + np.real(0.5 * (ph * A + np.conj(ph) * A.conj().T))
        g = _single_op_cross(fam1, sup.psi2.amplitudes, int(shift))
        if g:
            v = _assemble_vector(g, N)
            b = b + np.real(ph * v)
    return CorrelationData(cluster=sup.psi1.cluster, b=b, C=C,
                           subject="superposition")


def staggered_magnetization_stats(psi):
    """(mean, variance) of S_z^* = S_z^A - S_z^B on the state."""
    signs = psi.cluster.sublattice_signs().astype(np.float64)
    mz = psi.basis.states.astype(np.float64) / 2.0
    x = mz @ signs  # per-basis-state staggered magnetization (diagonal op)
    p = np.abs(psi.amplitudes) ** 2
    mean = float(x @ p)
    var = float((x - mean) ** 2 @ p)
    return mean, var


def sublattice_spin_stats(psi, which):
    """Average spin quantum number of one sublattice.

    Returns (mean_j, length, s2): mean_j is sum_j w_j j over the spectral
    weights of (sum_{i in sublattice} s_i)^2; length solves l(l+1) = <S_sub^2>.
    """
    cluster = psi.cluster
    sites = cluster.sublattice_sites(which)
    if not sites:
        return 0.0, 0.0, 0.0
    op = subset_spin_squared(cluster, psi.basis, sites).matrix
    # exact Krylov tridiagonalization: the operator has few distinct
    # eigenvalues, so this terminates quickly
    v = psi.amplitudes.astype(np.result_type(psi.amplitudes, np.float64))
    basis_vecs = [v]
    max_steps = int(2 * sum(cluster.sites[i].s for i in sites)) + 2
    for _ in range(max_steps):
        w = op @ basis_vecs[-1]
        for u in basis_vecs:
            w = w - np.vdot(u, w) * u
        for u in basis_vecs:  # second pass, full reorthogonalization
            w = w - np.vdot(u, w) * u
        nw = np.linalg.norm(w)
        if nw < 1e-10:
            break
        basis_vecs.append(w / nw)
    Q = np.array(basis_vecs).T
    Tmat = Q.conj().T @ (op @ Q)
    lam, U = np.linalg.eigh((Tmat + Tmat.conj().T) / 2)
    wts = np.abs(U[0, :]) ** 2
    lam = np.maximum(lam, 0.0)
    js = (-1 + np.sqrt(1 + 4 * lam)) / 2
    mean_j = float(np.sum(wts * js))
    s2 = float(np.sum(wts * lam))
    length = (-1 + np.sqrt(1 + 4 * s2)) / 2
    return mean_j, length, s2


def export_correlations_csv(data, fh):
    """Rows i, alpha, j, beta, value for C; one-spin rows leave j, beta empty."""
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["i", "alpha", "j", "beta", "value"])
    N = data.n_sites
    for i in range(N):
        for ai, alpha in enumerate(_AXES):
            wr.writerow([i, alpha, "", "", repr(float(data.b[3 * i + ai]))])
    for i in range(N):
        for ai, alpha in enumerate(_AXES):
            for j in range(N):
                for bi, beta in enumerate(_AXES):
                    wr.writerow([i, alpha, j, beta,
                                 repr(float(data.C[3 * i + ai, 3 * j + bi]))])
