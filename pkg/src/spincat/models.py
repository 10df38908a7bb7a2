"""Registry of the studied molecular nanomagnet models.

Clusters, couplings (Kelvin), sublattice assignments, special states, and
the composite treatment of the V15 triangle-plus-hexagons geometry.
Positive J is antiferromagnetic in H = sum_pairs J s_i . s_j.
"""

from dataclasses import dataclass

import numpy as np

from .basis import SpinCluster, SpinSite, enumerate_sector
from .operators import DMCoupling, ExchangeCoupling, SpinModel
from .correlations import CorrelationData, correlations_of_state
from .solver import QuantumState, SolverOptions, ground_state_in_sector


@dataclass(frozen=True)
class ClosedFormSizes:
    """Analytic sizes for fully polarizable (single-domain) systems:
    d_fi = S, d_lm = number of addressable units, d_rfi divergent."""
    key: str
    s_total: float
    n_units: int
    notes: str = ""

    @property
    def d_fi(self):
        return float(self.s_total)

    @property
    def d_lm(self):
        return int(self.n_units)

    @property
    def d_rfi_divergent(self):
        return True


@dataclass(frozen=True)
class V15Composite:
    """Three-spin triangle with a Dzyaloshinskii-Moriya z-term plus two
    identical antiferromagnetic hexagon rings, uncorrelated in the ground
    configuration; observables add block-wise."""
    triangle: SpinModel
    hexagon: SpinModel
    cluster: SpinCluster  # 15 sites: 3 triangle + 2 x 6 hexagon


@dataclass(frozen=True)
class ModelRegistryEntry:
    key: str
    model: object  # SpinModel, V15Composite, or ClosedFormSizes
    ground_S: float
    notes: str


def build_mn12(coupling_set=1):
    """Mn12-acetate: 8-site s=2 ring (A) over 4 s=3/2 sites (B, all pairs
    coupled), with alternating single/double exchange bridges to the ring."""
    if coupling_set == 1:
        JA, JB, JAB, JpAB = -64.5, 85.0, 215.0, 85.0
    elif coupling_set == 2:
        JA, JB, JAB, JpAB = 6.0, 8.0, 67.0, 62.0
    else:
        raise ValueError("coupling_set must be 1 or 2")
    sites = tuple([SpinSite(i, 2.0, "A") for i in range(8)] +
                  [SpinSite(8 + j, 1.5, "B") for j in range(4)])
    cluster = SpinCluster("mn12", sites)
    exch = [ExchangeCoupling(i, (i + 1) % 8, JA) for i in range(8)]
    exch += [ExchangeCoupling(8 + a, 8 + b, JB)
             for a in range(4) for b in range(a + 1, 4)]
    # odd ring positions (1-based) bond to one B site ...
    exch += [ExchangeCoupling(2 * k, 8 + k, JAB) for k in range(4)]
    # ... even ones bridge two consecutive B sites (cyclically)
    exch += [ExchangeCoupling(2 * k + 1, 8 + k, JpAB) for k in range(4)]
    exch += [ExchangeCoupling(2 * k + 1, 8 + (k + 1) % 4, JpAB)
             for k in range(4)]
    return SpinModel(cluster=cluster, exchange=tuple(exch), dm=(),
                     metadata={"key": "mn12_set%d" % coupling_set,
                               "source": "exchange set %d (K): J_A=%g, J_B=%g,"
                                         " J_AB=%g, J'_AB=%g"
                                         % (coupling_set, JA, JB, JAB, JpAB)})


def build_fe8():
    """Fe8: 8 x s=5/2; two central A spins bridge four external A spins and
    two B spins."""
    JA, JpA, JAB, JpAB = 26.0, 36.0, 200.0, 59.0
    subl = "AAAAAABB"
    sites = tuple(SpinSite(i, 2.5, subl[i]) for i in range(8))
    cluster = SpinCluster("fe8", sites)
    pairs = [(4, 0, JA), (4, 1, JA), (5, 2, JA), (5, 3, JA),
             (4, 5, JpA),
             (4, 6, JAB), (4, 7, JAB), (5, 6, JAB), (5, 7, JAB),
             (6, 0, JpAB), (6, 3, JpAB), (7, 1, JpAB), (7, 2, JpAB)]
    exch = tuple(ExchangeCoupling(i, j, J) for i, j, J in pairs)
    return SpinModel(cluster=cluster, exchange=exch, dm=(),
                     metadata={"key": "fe8",
                               "source": "exchange (K): J_A=26, J'_A=36,"
                                         " J_AB=200, J'_AB=59"})


_MN6_ALLOWED = {1, 2, 3, 4, 5}  # doubled s_A


def build_mn6_family(s_a=2.5):
    """Alternating 12-site ring: six metal spins s_A interleaved with six
    s=1/2 radicals, nearest-neighbor AF coupling only (J = 1; the measures
    depend on eigenvectors, not the single coupling's magnitude)."""
    two_sa = int(round(2 * s_a))
    if two_sa not in _MN6_ALLOWED or abs(2 * s_a - two_sa) > 1e-12:
        raise ValueError("s_A must be one of 1/2, 1, 3/2, 2, 5/2")
    sites = []
    for k in range(6):
        sites.append(SpinSite(2 * k, s_a, "A"))
        sites.append(SpinSite(2 * k + 1, 0.5, "B"))
    cluster = SpinCluster("mn6-sa%d" % two_sa, tuple(sites))
    exch = tuple(ExchangeCoupling(i, (i + 1) % 12, 1.0) for i in range(12))
    return SpinModel(cluster=cluster, exchange=exch, dm=(),
                     metadata={"key": "mn6", "s_a": s_a,
                               "source": "alternating ring, single AF"
                                         " coupling J=1"})


def build_fe4():
    """Fe4 star: three outer s=5/2 spins AF-coupled to a central s=5/2."""
    sites = tuple([SpinSite(i, 2.5, "A") for i in range(3)] +
                  [SpinSite(3, 2.5, "B")])
    cluster = SpinCluster("fe4", sites)
    exch = tuple(ExchangeCoupling(i, 3, 1.0) for i in range(3))
    return SpinModel(cluster=cluster, exchange=exch, dm=(),
                     metadata={"key": "fe4",
                               "source": "star geometry, single AF"
                                         " coupling J=1"})


def build_cr7ni():
    """Cr7Ni ring: seven s=3/2 and one s=1 site, nearest-neighbor AF J=1;
    sublattices alternate around the ring with Ni on B."""
    sites = tuple(SpinSite(i, 1.0 if i == 0 else 1.5,
                           "B" if i % 2 == 0 else "A") for i in range(8))
    cluster = SpinCluster("cr7ni", sites)
    exch = tuple(ExchangeCoupling(i, (i + 1) % 8, 1.0) for i in range(8))
    return SpinModel(cluster=cluster, exchange=exch, dm=(),
                     metadata={"key": "cr7ni",
                               "source": "heterometallic ring, single AF"
                                         " coupling J=1"})


def build_v15_effective(dz=0.1):
    """V15: effective s=1/2 triangle (AF J=1 plus Dzyaloshinskii-Moriya
    z-component) and two singlet hexagons (uniform AF s=1/2 rings).

    The hexagon Hamiltonian is not uniquely pinned down by the geometry;
    the uniform ring is the flagged choice here.
    """
    tri_sites = tuple(SpinSite(i, 0.5, "A") for i in range(3))
    tri = SpinCluster("v15-triangle", tri_sites)
    tri_exch = tuple(ExchangeCoupling(i, (i + 1) % 3, 1.0) for i in range(3))
    tri_dm = tuple(DMCoupling(i, (i + 1) % 3, dz) for i in range(3))
    triangle = SpinModel(cluster=tri, exchange=tri_exch, dm=tri_dm,
                         metadata={"key": "v15_triangle",
                                   "source": "effective triangle J=1,"
                                             " Dz=%g" % dz})
    hex_sites = tuple(SpinSite(i, 0.5, "A") for i in range(6))
    hexa = SpinCluster("v15-hexagon", hex_sites)
    hex_exch = tuple(ExchangeCoupling(i, (i + 1) % 6, 1.0) for i in range(6))
    hexagon = SpinModel(cluster=hexa, exchange=hex_exch, dm=(),
                        metadata={"key": "v15_hexagon",
                                  "source": "uniform AF ring J=1 (flagged"
                                            " modeling choice)"})
    full_sites = tuple(SpinSite(i, 0.5, "A") for i in range(15))
    full = SpinCluster("v15", full_sites)
    return V15Composite(triangle=triangle, hexagon=hexagon, cluster=full)


def chirality_z_operator(basis):
    """Matrix of C_z = (4/sqrt(3)) s_1 . (s_2 x s_3) on a 3-site sector
    basis, via the dense three-spin representation (scalar chirality
    commutes with S_z, so the sector is invariant)."""
    if basis.cluster.n_sites != 3:
        raise ValueError("chirality is defined for the 3-site triangle")
    sx = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    sy = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
    sz = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
    ops = [sx, sy, sz]
    eye = np.eye(2, dtype=complex)

    def site_op(op, k):
        mats = [eye, eye, eye]
        mats[k] = op
        return np.kron(np.kron(mats[0], mats[1]), mats[2])

    C = np.zeros((8, 8), dtype=complex)
    eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
           (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}
    for (a, b, c), sgn in eps.items():
        C += sgn * site_op(ops[a], 0) @ site_op(ops[b], 1) @ site_op(ops[c], 2)
    C *= 4.0 / np.sqrt(3.0)
    # embed sector rows: kron order has site 0 slowest and counts m=+1/2
    # as index 0, i.e. kron digit = 1 - our digit
    digits = (basis.states.astype(np.int64) + 1) // 2
    idx = (1 - digits[:, 0]) * 4 + (1 - digits[:, 1]) * 2 + (1 - digits[:, 2])
    return C[np.ix_(idx, idx)]


def chirality_states(composite_or_triangle):
    """The two positive-chirality triangle components: equal-weight
    (1, w, w^2)/sqrt(3) patterns over the one-flipped configurations of the
    M = +1/2 and M = -1/2 sectors, w = exp(2 pi i / 3)."""
    model = composite_or_triangle
    if isinstance(model, V15Composite):
        model = model.triangle
    tri = model.cluster
    w = np.exp(2j * np.pi / 3.0)
    out = []
    for two_M in (1, -1):
        basis = enumerate_sector(tri, two_M)
        # basis order = position of the minority spin; the M = -1/2 sector
        # enumerates it in reverse, so the phase pattern conjugates there to
        # keep the chirality eigenvalue at +1
        if two_M == 1:
            amps = np.array([1.0, w, w * w]) / np.sqrt(3.0)
        else:
            amps = np.array([1.0, w * w, w]) / np.sqrt(3.0)
        out.append(QuantumState(basis=basis, amplitudes=amps))
    return tuple(out)


def polarized_triangle_states(composite_or_triangle):
    """The fully polarized M = +/-3/2 triangle product states."""
    model = composite_or_triangle
    if isinstance(model, V15Composite):
        model = model.triangle
    tri = model.cluster
    out = []
    for two_M in (3, -3):
        basis = enumerate_sector(tri, two_M)
        amps = np.zeros(basis.dim)
        amps[0] = 1.0
        out.append(QuantumState(basis=basis, amplitudes=amps))
    return tuple(out)


def hexagon_ground(composite, opts=None):
    """Singlet ground state of one hexagon."""
    return ground_state_in_sector(composite.hexagon, 0,
                                  opts or SolverOptions(s_hint=0.0))


def compose_v15_state(composite, tri_state, hex_state):
    """Product state (triangle x hexagon x hexagon) as a sector state of the
    15-site cluster."""
    full = composite.cluster
    basis = enumerate_sector(full, tri_state.two_M + 2 * hex_state.two_M)
    digits_t = (tri_state.basis.states.astype(np.int64) + 1) // 2
    digits_h = (hex_state.basis.states.astype(np.int64) + 1) // 2
    # codes in the 15-site mixed radix (all radix 2): triangle occupies the
    # three most significant digits, then hexagon 1, then hexagon 2
    code_t = (digits_t @ (1 << np.arange(14, 11, -1, dtype=np.int64))
              ).astype(np.uint64)
    code_h1 = (digits_h @ (1 << np.arange(11, 5, -1, dtype=np.int64))
               ).astype(np.uint64)
    code_h2 = (digits_h @ (1 << np.arange(5, -1, -1, dtype=np.int64))
               ).astype(np.uint64)
    amp_t = tri_state.amplitudes
    amp_h = hex_state.amplitudes
    codes = (code_t[:, None, None] + code_h1[None, :, None] +
             code_h2[None, None, :]).reshape(-1)
    vals = (amp_t[:, None, None] * amp_h[None, :, None] *
            amp_h[None, None, :]).reshape(-1)
    rows = basis.lookup(codes)
    assert np.all(rows >= 0)
    amps = np.zeros(basis.dim, dtype=vals.dtype)
    np.add.at(amps, rows, vals)
    return QuantumState(basis=basis, amplitudes=amps)


def compose_v15_correlations(tri_data, hex_data):
    """15-site CorrelationData from triangle and hexagon blocks.

    Product structure: cross-subsystem <s_ia s_jb> factorizes into
    <s_ia><s_jb>, so covariances add block-wise and the composite variance
    is V_T + 2 V_H for any direction field."""
    n = 15
    b = np.concatenate([tri_data.b, hex_data.b, hex_data.b])
    C = np.zeros((3 * n, 3 * n))
    C += np.outer(b, b)
    sl_t = slice(0, 9)
    sl_h1 = slice(9, 27)
    sl_h2 = slice(27, 45)
    C[sl_t, sl_t] = tri_data.C
    C[sl_h1, sl_h1] = hex_data.C
    C[sl_h2, sl_h2] = hex_data.C
    full_sites = tuple(SpinSite(i, 0.5, "A") for i in range(15))
    return CorrelationData(cluster=SpinCluster("v15", full_sites), b=b, C=C,
                           subject=tri_data.subject)


def closed_form_sizes(key):
    """Analytic Table-row entries for the single-domain systems."""
    records = {
        "mn10": ClosedFormSizes("mn10", 23.0, 10,
                                notes="ferromagnetic ground S=23, ten ions"),
        "tb": ClosedFormSizes("tb", 6.0, 1,
                              notes="single J=6 ion, one addressable unit"),
    }
    if key not in records:
        raise KeyError("closed-form sizes known for %s" %
                       sorted(records))
    return records[key]


def ferromagnet_closed_form(s_total, n_units):
    return ClosedFormSizes("ferromagnet", float(s_total), int(n_units))


def build_ideal_variant(geometry, ratio=1000.0):
    """Same wiring as a registry ferrimagnet, but with every intra-sublattice
    bond strongly ferromagnetic (-ratio) and every inter-sublattice bond a
    weak AF (+1): drives the ground state to the idealized collinear limit."""
    base = {"mn12": lambda: build_mn12(1), "fe8": build_fe8}[geometry]()
    subl = [s.sublattice for s in base.cluster.sites]
    exch = []
    for e in base.exchange:
        intra = subl[e.i] == subl[e.j]
        exch.append(ExchangeCoupling(e.i, e.j, -ratio if intra else 1.0))
    return SpinModel(cluster=base.cluster, exchange=tuple(exch), dm=(),
                     metadata={"key": "%s_ideal_variant" % geometry,
                               "source": "intra ferromagnetic -%g, inter AF"
                                         " +1" % ratio})


def registry():
    """key -> ModelRegistryEntry for every system in the study."""
    entries = [
        ModelRegistryEntry("mn12_set1", build_mn12(1), 10.0,
                           "Mn12-acetate, exchange set 1"),
        ModelRegistryEntry("mn12_set2", build_mn12(2), 10.0,
                           "Mn12-acetate, exchange set 2"),
        ModelRegistryEntry("fe8", build_fe8(), 10.0, "Fe8 octanuclear"),
        ModelRegistryEntry("mn6", build_mn6_family(2.5), 12.0,
                           "Mn6 ferrimagnetic ring, s_A=5/2"),
        ModelRegistryEntry("fe4", build_fe4(), 5.0, "Fe4 star"),
        ModelRegistryEntry("cr7ni", build_cr7ni(), 0.5,
                           "Cr7Ni heterometallic ring"),
        ModelRegistryEntry("v15", build_v15_effective(), 0.5,
                           "V15 triangle + frozen hexagons"),
        ModelRegistryEntry("mn10", closed_form_sizes("mn10"), 23.0,
                           "Mn10 ferromagnetic, closed form"),
        ModelRegistryEntry("tb", closed_form_sizes("tb"), 6.0,
                           "Tb single ion, closed form"),
    ]
    return {e.key: e for e in entries}
