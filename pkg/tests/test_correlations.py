import io

import numpy as np
import pytest

from oracles import brute_force_moments, embed_full, full_hamiltonian
from spincat.basis import SpinCluster, SpinSite, enumerate_sector
from spincat.correlations import (CorrelationData, Superposition,
                                  correlations_of_state,
                                  correlations_of_superposition,
                                  export_correlations_csv,
                                  staggered_magnetization_stats,
                                  sublattice_spin_stats)
from spincat.models import build_cr7ni, build_fe4
from spincat.operators import ExchangeCoupling, SpinModel
from spincat.solver import QuantumState, SolverOptions, ground_state_in_sector


_ONE = SpinCluster("one", (SpinSite(0, 0.5, "A"),))


def single_site_state(two_m, cluster=_ONE):
    basis = enumerate_sector(cluster, two_m)
    return QuantumState(basis=basis, amplitudes=np.ones(1))


def random_mixed_model(seed, n_sites):
    rng = np.random.default_rng(seed)
    two_s = rng.integers(1, 4, size=n_sites)  # spins 1/2 .. 3/2
    sites = tuple(SpinSite(i, int(ts) / 2.0, "A" if i % 2 else "B")
                  for i, ts in enumerate(two_s))
    cluster = SpinCluster("rand%d" % seed, sites)
    exch = []
    for i in range(n_sites):
        for j in range(i + 1, n_sites):
            if i + 1 == j or rng.random() < 0.5:
                exch.append(ExchangeCoupling(i, j, float(rng.normal())))
    return SpinModel(cluster=cluster, exchange=tuple(exch))


def sector_state(model, two_M, pick=0, seed=0):
    """A normalized random real vector in the sector (not an eigenstate);
    correlation assembly is linear algebra on any state."""
    basis = enumerate_sector(model.cluster, two_M)
    rng = np.random.default_rng(seed + 100 * pick + two_M)
    amps = rng.standard_normal(basis.dim)
    amps /= np.linalg.norm(amps)
    return QuantumState(basis=basis, amplitudes=amps)


def test_single_spin_up():
    psi = single_site_state(1)
    data = correlations_of_state(psi)
    assert data.b == pytest.approx([0.0, 0.0, 0.5], abs=1e-15)
    assert data.C == pytest.approx(np.diag([0.25, 0.25, 0.25]), abs=1e-15)


def test_single_spin_transverse_superposition():
    # (|up> + |down>)/sqrt(2) points along +x
    psi1 = single_site_state(1)
    psi2 = single_site_state(-1)
    sup = Superposition(psi1, psi2, 0.0)
    data = correlations_of_superposition(sup)
    assert data.b == pytest.approx([0.5, 0.0, 0.0], abs=1e-15)
    assert np.diag(data.C) == pytest.approx([0.25, 0.25, 0.25], abs=1e-15)
    # phase pi/2 rotates the moment to +y
    data_y = correlations_of_superposition(Superposition(psi1, psi2, np.pi / 2))
    assert data_y.b == pytest.approx([0.0, 0.5, 0.0], abs=1e-12)


def test_two_spin_singlet_correlators():
    sites = (SpinSite(0, 0.5, "A"), SpinSite(1, 0.5, "B"))
    model = SpinModel(cluster=SpinCluster("dimer", sites),
                      exchange=(ExchangeCoupling(0, 1, 1.0),))
    st = ground_state_in_sector(model, 0, SolverOptions(s_hint=0.0))
    data = correlations_of_state(st)
    assert data.b == pytest.approx(np.zeros(6), abs=1e-12)
    for axis in range(3):
        assert data.C[axis, 3 + axis] == pytest.approx(-0.25, abs=1e-12)
        assert data.C[axis, axis] == pytest.approx(0.25, abs=1e-12)


def test_trace_rule_per_site():
    model = build_fe4()
    st = ground_state_in_sector(model, 4, SolverOptions(s_hint=5.0))
    data = correlations_of_state(st)
    for i in range(4):
        s = model.cluster.sites[i].s
        tr = sum(data.C[3 * i + a, 3 * i + a] for a in range(3))
        assert tr == pytest.approx(s * (s + 1), abs=1e-10)


def test_isotropic_ring_correlators():
    model = build_cr7ni()
    st = ground_state_in_sector(model, 1, SolverOptions(s_hint=0.5))
    data = correlations_of_state(st)
    # S=1/2 member of an isotropic-exchange multiplet: near-isotropic pair
    # correlators up to the M-dependent anisotropy of the projection
    for (i, j) in [(0, 1), (1, 2), (3, 4)]:
        xx = data.C[3 * i + 0, 3 * j + 0]
        yy = data.C[3 * i + 1, 3 * j + 1]
        assert xx == pytest.approx(yy, abs=1e-10)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_state_moments_match_brute_force(seed):
    model = random_mixed_model(seed, 4)
    assert model.cluster.full_dimension <= 1024
    two_M = int(model.cluster.two_s.sum() % 2)
    if (int(model.cluster.two_s.sum()) - two_M) % 2:
        two_M += 1
    psi = sector_state(model, two_M, seed=seed)
    data = correlations_of_state(psi)
    b_ref, C_ref = brute_force_moments(model.cluster, embed_full(psi))
    assert np.max(np.abs(data.b - b_ref)) < 1e-10
    assert np.max(np.abs(data.C - C_ref)) < 1e-10


@pytest.mark.parametrize("delta_two_M,phi", [(2, 0.0), (2, 1.1), (4, 0.7),
                                             (4, 0.0), (6, 0.0), (6, 2.2)])
def test_superposition_moments_match_brute_force(delta_two_M, phi):
    # delta 2M = 2 exercises single-spin and two-spin cross terms, 4 the
    # two-spin ones only, 6 none (component average)
    model = random_mixed_model(7, 4)
    total = int(model.cluster.two_s.sum())
    two_M1 = total % 2 + delta_two_M
    two_M2 = two_M1 - delta_two_M
    psi1 = sector_state(model, two_M1, seed=11)
    psi2 = sector_state(model, two_M2, seed=12)
    sup = Superposition(psi1, psi2, phi)
    data = correlations_of_superposition(sup)
    vec = (embed_full(psi1) + np.exp(1j * phi) * embed_full(psi2)) / np.sqrt(2)
    b_ref, C_ref = brute_force_moments(model.cluster, vec)
    assert np.max(np.abs(data.b - b_ref)) < 1e-10
    assert np.max(np.abs(data.C - C_ref)) < 1e-10


def test_distant_sectors_average_component_moments():
    model = build_fe4()
    opts = SolverOptions(s_hint=5.0)
    psi1 = ground_state_in_sector(model, 10, opts)
    psi2 = ground_state_in_sector(model, -10, opts)
    d1 = correlations_of_state(psi1)
    d2 = correlations_of_state(psi2)
    sup = correlations_of_superposition(Superposition(psi1, psi2, 0.4))
    assert np.max(np.abs(sup.C - 0.5 * (d1.C + d2.C))) < 1e-12
    assert np.max(np.abs(sup.b - 0.5 * (d1.b + d2.b))) < 1e-12


def test_superposition_rejects_mismatched_components():
    model = build_fe4()
    opts = SolverOptions(s_hint=5.0)
    psi = ground_state_in_sector(model, 10, opts)
    with pytest.raises(ValueError):
        Superposition(psi, psi, 0.0)


def test_staggered_stats_match_correlation_data():
    from spincat.fisher import staggered_field, variance_of_field
    model = build_fe4()
    st = ground_state_in_sector(model, 10, SolverOptions(s_hint=5.0))
    mean, var = staggered_magnetization_stats(st)
    data = correlations_of_state(st)
    fld = staggered_field(model.cluster)
    assert var == pytest.approx(variance_of_field(data, fld), abs=1e-10)
    assert mean == pytest.approx(float(data.b @ fld.flat), abs=1e-10)


def test_sublattice_spin_stats_on_product_state():
    from spincat.fisher import psi_max_states
    model = build_fe4()
    up, _ = psi_max_states(model.cluster)
    ja, la, s2a = sublattice_spin_stats(up, "A")
    jb, lb, s2b = sublattice_spin_stats(up, "B")
    assert ja == pytest.approx(7.5, abs=1e-10)
    assert la == pytest.approx(7.5, abs=1e-10)
    assert s2a == pytest.approx(7.5 * 8.5, abs=1e-9)
    assert jb == pytest.approx(2.5, abs=1e-10)
    assert s2b == pytest.approx(2.5 * 3.5, abs=1e-10)


def test_csv_export_round_trip():
    model = build_fe4()
    st = ground_state_in_sector(model, 10, SolverOptions(s_hint=5.0))
    data = correlations_of_state(st)
    fh = io.StringIO()
    export_correlations_csv(data, fh)
    text = fh.getvalue()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header, rows = lines[0], lines[1:]
    assert header == "i,alpha,j,beta,value"
    n = model.cluster.n_sites
    assert len(rows) == 3 * n + (3 * n) ** 2
    for row in rows[: 3 * n]:  # one-spin rows leave j and beta empty
        i, alpha, j, beta, val = row.split(",")
        assert (j, beta) == ("", "")
        idx = 3 * int(i) + "xyz".index(alpha)
        assert float(val) == data.b[idx]
    i, alpha, j, beta, val = rows[3 * n].split(",")
    assert (i, alpha, j, beta) == ("0", "x", "0", "x")
    assert float(val) == data.C[0, 0]
