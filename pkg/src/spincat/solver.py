"""Lowest eigenpairs of sector Hamiltonians and labeled quantum states.

Dense path below a dimension threshold, implicitly-restarted Lanczos
(ARPACK via scipy.sparse.linalg.eigsh, full reorthogonalization within the
Krylov factorization) above it.  Every returned pair is residual-checked.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .basis import enumerate_sector
from .operators import build_exchange_hamiltonian

DENSE_THRESHOLD = 4096
DEGENERACY_TOL = 1e-7


class NoConvergence(RuntimeError):
    def __init__(self, msg, iterations=None, residual=None):
        super().__init__(msg)
        self.iterations = iterations
        self.residual = residual


class AmbiguousMultiplet(RuntimeError):
    """Degenerate sector bottom whose members cannot be told apart by <S^2>."""


@dataclass
class SolverOptions:
    tol: float = 1e-9
    seed: int = 2024
    max_iter: int = 20000
    dense_threshold: int = DENSE_THRESHOLD
    degeneracy_tol: float = DEGENERACY_TOL
    k: int = 2
    budget: int = None
    s_hint: float = None  # expected total spin of the multiplet


@dataclass
class QuantumState:
    basis: object
    amplitudes: np.ndarray = field(repr=False)
    energy: float = None
    s_squared: float = None
    phase_anchor: int = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes)
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > 1e-12:
            if nrm == 0:
                raise ValueError("zero state")
            a = a / nrm
        anchor = int(np.argmax(np.abs(a)))  # ties resolve to the lowest index
        ph = a[anchor]
        if abs(ph) > 0:
            a = a * (abs(ph) / ph)
        if np.iscomplexobj(a) and np.max(np.abs(a.imag)) == 0.0:
            a = a.real
        self.amplitudes = a
        self.phase_anchor = anchor

    @property
    def two_M(self):
        return self.basis.two_M

    @property
    def M(self):
        return self.basis.two_M / 2.0

    @property
    def cluster(self):
        return self.basis.cluster

    def overlap(self, other):
        if other.basis.two_M != self.basis.two_M:
            return 0.0
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _operator_norm_bound(H):
    """Cheap upper bound on ||H||_2 (infinity norm of the sparse matrix)."""
    return float(np.abs(H).sum(axis=1).max())


def lowest_eigenpairs(H_op, k=1, tol=1e-9, max_iter=20000, seed=2024,
                      dense_threshold=DENSE_THRESHOLD,
                      degeneracy_tol=DEGENERACY_TOL):
    """k lowest eigenpairs, ascending; vectors orthonormal.

    Returns (energies, vectors, degenerate_flag); degenerate_flag is set when
    the first two returned eigenvalues agree within degeneracy_tol (relative).
    """
    H = H_op.matrix if hasattr(H_op, "matrix") else H_op
    dim = H.shape[0]
    k = min(k, dim)
    scale = max(_operator_norm_bound(H), 1.0)
    if dim <= dense_threshold or k > dim - 2:
        dense = H.toarray() if hasattr(H, "toarray") else np.asarray(H)
        w, v = np.linalg.eigh(dense)
        w, v = w[:k], v[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim)
        try:
            w, v = spla.eigsh(H, k=k, which="SA", tol=tol / scale,
                              maxiter=max_iter, v0=v0)
        except spla.ArpackNoConvergence as exc:
            got = len(exc.eigenvalues)
            raise NoConvergence(
                "Lanczos did not converge (%d/%d pairs after %d iterations)"
                % (got, k, max_iter), iterations=max_iter) from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    for c in range(k):
        r = np.linalg.norm(H @ v[:, c] - w[c] * v[:, c])
        if r > max(tol, 1e-8 * scale):
            raise NoConvergence("residual %.3e exceeds tolerance" % r, residual=r)
    degenerate = k >= 2 and abs(w[1] - w[0]) <= degeneracy_tol * scale
    return w, v, degenerate


def expectation_s_squared(basis, psi):
    """<S^2> via ladder bookkeeping (no S^2 matrix): sum s_i(s_i+1)
    + 2 sum_{i<j} [<s_iz s_jz> + Re<s_i+ s_j->]."""
    from .correlations import _ladder_family_minus  # local import, no cycle

    cluster = basis.cluster
    mz = basis.states.astype(np.float64) / 2.0
    wz = mz * np.abs(psi)[:, None] ** 2
    zz = mz.T @ wz  # (N, N): <s_iz s_jz> on the diagonal ordering trick
    # careful: zz[i, j] = sum_t m_i m_j |psi_t|^2 = <s_iz s_jz> exactly
    Wm = _ladder_family_minus(basis, psi)
    G = Wm.conj().T @ Wm  # G[i, j] = <s_i+ s_j->
    total = sum(st.s * (st.s + 1) for st in cluster.sites)
    n = cluster.n_sites
    off = ~np.eye(n, dtype=bool)
    total += (zz[off].sum() + np.real(G)[off].sum())
    return float(total)


def ground_state_in_sector(model, two_M, opts=None):
    """Lowest state of the sector, labeled with energy and <S^2>.

    If the sector bottom is degenerate, the member with <S^2> closest to
    s_hint(s_hint+1) is selected; with no hint and indistinguishable <S^2>
    values, AmbiguousMultiplet is raised.
    """
    opts = opts or SolverOptions()
    budget = opts.budget
    kwargs = {} if budget is None else {"budget": budget}
    basis = enumerate_sector(model.cluster, two_M, **kwargs)
    H = build_exchange_hamiltonian(model, basis)
    k = max(2, opts.k) if basis.dim > 1 else 1
    while True:
        w, v, degen = lowest_eigenpairs(
            H, k=k, tol=opts.tol, max_iter=opts.max_iter, seed=opts.seed,
            dense_threshold=opts.dense_threshold,
            degeneracy_tol=opts.degeneracy_tol)
        scale = max(_operator_norm_bound(H.matrix), 1.0)
        group = np.nonzero(w - w[0] <= opts.degeneracy_tol * scale)[0]
        if len(group) < k or k >= min(basis.dim, 8):
            break
        k = min(basis.dim, 2 * k)  # degeneracy may extend past the block

    s_sq = [expectation_s_squared(basis, v[:, c]) for c in group]
    if len(group) == 1:
        pick = 0
    elif opts.s_hint is not None:
        target = opts.s_hint * (opts.s_hint + 1)
        pick = int(np.argmin([abs(x - target) for x in s_sq]))
    else:
        if max(s_sq) - min(s_sq) < 1e-6:
            raise AmbiguousMultiplet(
                "degenerate sector bottom with indistinguishable <S^2>=%.6f"
                % s_sq[0])
        pick = 0
    c = group[pick]
    return QuantumState(basis=basis, amplitudes=v[:, c], energy=float(w[c]),
                        s_squared=float(s_sq[pick]))
