"""Sector-resolved sparse operators: exchange Hamiltonians, DM terms,
single-spin components, S^2, and the JSON model format.

Couplings are in Kelvin with H = +J s_i.s_j (J > 0 antiferromagnetic).
The flip-flop parts are assembled by arithmetic on the mixed-radix codes of
the basis: raising m_i by one is code + w_i, so target rows come from one
vectorized searchsorted per coupling.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import (SpinCluster, SpinSite, SectorBasis, _radix_weights,
                    _as_two_s, format_half_integer, enumerate_sector)


@dataclass(frozen=True)
class ExchangeCoupling:
    i: int
    j: int
    J: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("exchange coupling needs two distinct sites")


@dataclass(frozen=True)
class DMCoupling:
    """Coefficient of z . (s_i x s_j); only the z component is supported."""
    i: int
    j: int
    Dz: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("DM coupling needs two distinct sites")


@dataclass(frozen=True)
class SpinModel:
    cluster: SpinCluster
    exchange: tuple
    dm: tuple = ()
    metadata: str = ""

    def __post_init__(self):
        object.__setattr__(self, "exchange", tuple(self.exchange))
        object.__setattr__(self, "dm", tuple(self.dm))
        n = self.cluster.n_sites
        for c in list(self.exchange) + list(self.dm):
            if not (0 <= c.i < n and 0 <= c.j < n):
                raise ValueError("coupling references site outside cluster")


@dataclass(frozen=True)
class SparseOperator:
    basis_in: SectorBasis
    basis_out: SectorBasis
    matrix: sp.csr_matrix = field(repr=False)
    hermitian: bool = False

    @property
    def shape(self):
        return self.matrix.shape

    def dense(self):
        return self.matrix.toarray()


def _ladder_coeff(two_s, two_m, up):
    """f such that s_+- |s,m> = f |s,m+-1>, from doubled integers."""
    s = two_s / 2.0
    m = two_m / 2.0
    if up:
        return np.sqrt(np.maximum(s * (s + 1) - m * (m + 1), 0.0))
    return np.sqrt(np.maximum(s * (s + 1) - m * (m - 1), 0.0))


def _flip_flop_entries(basis, i, j):
    """Rows, cols, coefficients of s_i^+ s_j^- within one sector basis."""
    two_s = basis.cluster.two_s
    w = _radix_weights(two_s)
    st = basis.states
    ok = (st[:, i] < two_s[i]) & (st[:, j] > -two_s[j])
    cols = np.nonzero(ok)[0]
    if len(cols) == 0:
        return cols, cols, np.zeros(0)
    codes = basis.codes[cols] + w[i] - w[j]
    rows = basis.lookup(codes)
    assert np.all(rows >= 0)
    coeff = (_ladder_coeff(two_s[i], st[cols, i].astype(np.int64), up=True)
             * _ladder_coeff(two_s[j], st[cols, j].astype(np.int64), up=False))
    return rows, cols, coeff


def build_exchange_hamiltonian(model, basis):
    """Sparse H = sum J_ij s_i.s_j + sum Dz_ij z.(s_i x s_j) in the sector.

    s_i.s_j = s_iz s_jz + (s_i+ s_j- + s_i- s_j+)/2
    z.(s_i x s_j) = (s_i+ s_j- - s_i- s_j+) / (2i)
    """
    if basis.cluster is not model.cluster:
        raise ValueError("basis does not belong to the model's cluster")
    dim = basis.dim
    mz = basis.states.astype(np.float64) / 2.0

    diag = np.zeros(dim)
    for c in model.exchange:
        diag += c.J * mz[:, c.i] * mz[:, c.j]

    complex_needed = len(model.dm) > 0
    dtype = np.complex128 if complex_needed else np.float64
    rows_all, cols_all, vals_all = [], [], []

    # gather flip-flop amplitudes: a * s_i+ s_j- + conj-symmetric partner
    amp = {}
    for c in model.exchange:
        amp[(c.i, c.j)] = amp.get((c.i, c.j), 0) + c.J / 2.0
        amp[(c.j, c.i)] = amp.get((c.j, c.i), 0) + c.J / 2.0
    for c in model.dm:
        # (i/2) Dz (s_i+ s_j- - s_i- s_j+) : note 1/(2i) = -i/2 for the cross
        # product; H_DM = Dz * (s_i+ s_j- - s_i- s_j+) / (2i)
        amp[(c.i, c.j)] = amp.get((c.i, c.j), 0) + c.Dz / 2j
        amp[(c.j, c.i)] = amp.get((c.j, c.i), 0) - c.Dz / 2j

    for (i, j), a in sorted(amp.items()):
        if a == 0:
            continue
        r, cl, f = _flip_flop_entries(basis, i, j)
        if len(r) == 0:
            continue
        rows_all.append(r)
        cols_all.append(cl)
        vals_all.append((a * f).astype(dtype))

    rows = np.concatenate([np.arange(dim)] + rows_all)
    cols = np.concatenate([np.arange(dim)] + cols_all)
    vals = np.concatenate([diag.astype(dtype)] + vals_all)
    H = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    H.sum_duplicates()
    return SparseOperator(basis_in=basis, basis_out=basis, matrix=H, hermitian=True)


def single_spin_operator(cluster, basis_in, basis_out, site, component):
    """Matrix of s_{site,component} mapping basis_in -> basis_out.

    component 'z' needs equal sectors; 'plus'/'minus' need 2M_out - 2M_in =
    +-2.  x and y are assembled from plus/minus by the caller.
    """
    if basis_in.cluster is not cluster or basis_out.cluster is not cluster:
        raise ValueError("basis/cluster mismatch")
    two_s = cluster.two_s
    dm = basis_out.two_M - basis_in.two_M
    st = basis_in.states
    if component == "z":
        if dm != 0:
            raise ValueError("s_z preserves the sector")
        vals = st[:, site].astype(np.float64) / 2.0
        M = sp.diags(vals).tocsr()
        return SparseOperator(basis_in, basis_out, M, hermitian=True)
    if component not in ("plus", "minus"):
        raise ValueError("component must be z, plus or minus")
    up = component == "plus"
    if dm != (2 if up else -2):
        raise ValueError("sector mismatch for component %r" % component)
    w = _radix_weights(two_s)
    ok = st[:, site] < two_s[site] if up else st[:, site] > -two_s[site]
    cols = np.nonzero(ok)[0]
    codes = basis_in.codes[cols] + w[site] if up else basis_in.codes[cols] - w[site]
    rows = basis_out.lookup(codes)
    keep = rows >= 0
    rows, cols = rows[keep], cols[keep]
    coeff = _ladder_coeff(two_s[site], st[cols, site].astype(np.int64), up)
    M = sp.coo_matrix((coeff, (rows, cols)),
                      shape=(basis_out.dim, basis_in.dim)).tocsr()
    return SparseOperator(basis_in, basis_out, M, hermitian=False)


def total_spin_squared(cluster, basis):
    """S^2 = sum s_i(s_i+1) + 2 sum_{i<j} s_i.s_j restricted to the sector."""
    if basis.cluster is not cluster:
        raise ValueError("basis/cluster mismatch")
    n = cluster.n_sites
    pairs = [ExchangeCoupling(i, j, 2.0) for i in range(n) for j in range(i + 1, n)]
    model = SpinModel(cluster=cluster, exchange=pairs)
    op = build_exchange_hamiltonian(model, basis)
    s_terms = sum(st.s * (st.s + 1) for st in cluster.sites)
    M = (op.matrix + s_terms * sp.identity(basis.dim, format="csr")).tocsr()
    return SparseOperator(basis, basis, M, hermitian=True)


def subset_spin_squared(cluster, basis, sites):
    """(sum_{i in sites} s_i)^2 restricted to the sector."""
    sites = list(sites)
    pairs = [ExchangeCoupling(i, j, 2.0)
             for a, i in enumerate(sites) for j in sites[a + 1:]]
    if pairs:
        model = SpinModel(cluster=cluster, exchange=pairs)
        M = build_exchange_hamiltonian(model, basis).matrix
    else:
        M = sp.csr_matrix((basis.dim, basis.dim))
    s_terms = sum(cluster.sites[i].s * (cluster.sites[i].s + 1) for i in sites)
    M = (M + s_terms * sp.identity(basis.dim, format="csr")).tocsr()
    return SparseOperator(basis, basis, M, hermitian=True)


# ---------------------------------------------------------------------------
# JSON model format
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "sites", "exchange", "dm", "source"}
_SITE_KEYS = {"s", "sublattice", "label"}
_EXCH_KEYS = {"i", "j", "J_kelvin"}
_DM_KEYS = {"i", "j", "Dz_kelvin"}


class ModelFormatError(ValueError):
    """Model JSON violates the documented schema."""


def _check_keys(d, allowed, where):
    extra = set(d) - allowed
    if extra:
        raise ModelFormatError("unknown keys %s in %s" % (sorted(extra), where))


def model_from_json(text):
    """Parse the documented JSON model schema (strict: unknown keys rejected)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("invalid JSON: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("top level must be an object")
    _check_keys(doc, _TOP_KEYS, "model")
    for req in ("name", "sites", "exchange"):
        if req not in doc:
            raise ModelFormatError("missing required field %r" % req)
    sites = []
    for k, sd in enumerate(doc["sites"]):
        _check_keys(sd, _SITE_KEYS, "sites[%d]" % k)
        sites.append(SpinSite(index=k, s=_as_two_s(sd["s"]) / 2.0,
                              sublattice=sd.get("sublattice", "A"),
                              label=sd.get("label", "")))
    cluster = SpinCluster(name=doc["name"], sites=tuple(sites))
    exchange = []
    for k, cd in enumerate(doc["exchange"]):
        _check_keys(cd, _EXCH_KEYS, "exchange[%d]" % k)
        exchange.append(ExchangeCoupling(i=int(cd["i"]), j=int(cd["j"]),
                                         J=float(cd["J_kelvin"])))
    dm = []
    for k, cd in enumerate(doc.get("dm", [])):
        _check_keys(cd, _DM_KEYS, "dm[%d]" % k)
        dm.append(DMCoupling(i=int(cd["i"]), j=int(cd["j"]),
                             Dz=float(cd["Dz_kelvin"])))
    return SpinModel(cluster=cluster, exchange=tuple(exchange), dm=tuple(dm),
                     metadata=doc.get("source", ""))


def model_to_json(model, indent=2):
    doc = {
        "name": model.cluster.name,
        "sites": [{"s": format_half_integer(st.two_s),
                   "sublattice": st.sublattice,
                   "label": st.label} for st in model.cluster.sites],
        "exchange": [{"i": c.i, "j": c.j, "J_kelvin": c.J} for c in model.exchange],
        "dm": [{"i": c.i, "j": c.j, "Dz_kelvin": c.Dz} for c in model.dm],
        "source": model.metadata,
    }
    return json.dumps(doc, indent=indent)
