import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_d_lm, embed_full
from spincat.basis import SpinCluster, SpinSite, enumerate_sector
from spincat.distinguishability import (DlmOptions, SubsetTooLarge, d_lm,
                                        discrimination_probability, mask_sites,
                                        reduced_density_matrix, subset_mask)
from spincat.models import build_fe4, build_v15_effective
from spincat.operators import ExchangeCoupling, SpinModel
from spincat.solver import QuantumState, SolverOptions, ground_state_in_sector


@given(st.sets(st.integers(min_value=0, max_value=19)))
def test_mask_round_trip(sites):
    assert set(mask_sites(subset_mask(sites))) == sites


def fe4_pair():
    model = build_fe4()
    opts = SolverOptions(s_hint=5.0)
    return (ground_state_in_sector(model, 10, opts),
            ground_state_in_sector(model, -10, opts))


def test_rdm_is_a_density_matrix():
    psi1, _ = fe4_pair()
    for subset in [(0,), (1, 2), (0, 3), (0, 1, 2)]:
        rho = reduced_density_matrix(psi1, subset)
        assert rho.shape == (6 ** len(subset),) * 2
        assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
        lam = np.linalg.eigvalsh(rho)
        assert lam.min() > -1e-10
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-14


def test_rdm_matches_full_space_partial_trace():
    psi1, _ = fe4_pair()
    full = embed_full(psi1).reshape(6, 6, 6, 6)
    rho01 = np.einsum("abxy,cdxy->abcd", full, full.conj()).reshape(36, 36)
    ours = reduced_density_matrix(psi1, (0, 1))
    assert np.max(np.abs(ours - rho01)) < 1e-12
    rho3 = np.einsum("xyza,xyzb->ab", full, full.conj())
    ours3 = reduced_density_matrix(psi1, (3,))
    assert np.max(np.abs(ours3 - rho3)) < 1e-12


def test_rdm_subset_cap():
    psi1, _ = fe4_pair()
    with pytest.raises(SubsetTooLarge):
        reduced_density_matrix(psi1, (0, 1, 2, 3), max_subset_dim=1000)
    with pytest.raises(ValueError):
        reduced_density_matrix(psi1, ())
    with pytest.raises(ValueError):
        reduced_density_matrix(psi1, (0, 9))


def test_discrimination_probability_limits():
    psi1, psi2 = fe4_pair()
    # orthogonal pure states: full-cluster measurement is perfect
    assert discrimination_probability(psi1, psi2, range(4)) == \
        pytest.approx(1.0, abs=1e-12)
    # identical states: coin flip on any subset
    assert discrimination_probability(psi1, psi1, (0, 1)) == \
        pytest.approx(0.5, abs=1e-12)
    p = discrimination_probability(psi1, psi2, (0,))
    assert 0.5 - 1e-12 <= p <= 1.0


def test_full_cluster_pure_formula_matches_eigsum():
    # on a small cluster the dense trace-norm route must agree with the
    # pure-state shortcut used for the full subset
    tri = build_v15_effective().triangle
    b1 = enumerate_sector(tri.cluster, 1)
    rng = np.random.default_rng(3)
    a1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a1 /= np.linalg.norm(a1)
    a2 /= np.linalg.norm(a2)
    psi1 = QuantumState(basis=b1, amplitudes=a1)
    psi2 = QuantumState(basis=b1, amplitudes=a2)
    shortcut = discrimination_probability(psi1, psi2, (0, 1, 2))
    # dense route: build both full density matrices in the sector basis
    rho1 = np.outer(a1, a1.conj())
    rho2 = np.outer(a2, a2.conj())
    lam = np.linalg.eigvalsh(rho1 - rho2)
    dense = 0.5 + 0.25 * np.sum(np.abs(lam))
    assert shortcut == pytest.approx(dense, abs=1e-12)


def test_monotonicity_under_subset_growth():
    psi1, psi2 = fe4_pair()
    rng = np.random.default_rng(11)
    for _ in range(40):
        size = rng.integers(1, 4)
        small = sorted(rng.choice(4, size=size, replace=False).tolist())
        extra = [i for i in range(4) if i not in small]
        add = rng.choice(extra, size=rng.integers(1, len(extra) + 1),
                         replace=False).tolist()
        big = sorted(small + add)
        p_small = discrimination_probability(psi1, psi2, small)
        p_big = discrimination_probability(psi1, psi2, big)
        assert p_big >= p_small - 1e-10


def test_d_lm_validation():
    psi1, psi2 = fe4_pair()
    with pytest.raises(ValueError):
        d_lm(psi1, psi2, delta=0.0)
    with pytest.raises(ValueError):
        d_lm(psi1, psi2, delta=0.6)
    big = SpinCluster("big", tuple(SpinSite(i, 0.5, "A") for i in range(21)))
    b_up = enumerate_sector(big, 21)
    s_up = QuantumState(basis=b_up, amplitudes=np.ones(1))
    b_dn = enumerate_sector(big, -21)
    s_dn = QuantumState(basis=b_dn, amplitudes=np.ones(1))
    with pytest.raises(ValueError):
        d_lm(s_up, s_dn)


def test_d_lm_partition_is_a_partition():
    psi1, psi2 = fe4_pair()
    res = d_lm(psi1, psi2, delta=0.01)
    parts = res.parts
    union = 0
    for m in parts:
        assert union & m == 0
        union |= m
    assert union == (1 << 4) - 1
    assert res.n_parts == len(parts)
    assert all(p > 1.0 - res.delta for p in res.per_part_probability)
    assert res.full_cluster_probability == pytest.approx(1.0, abs=1e-12)


def random_small_model(seed, n_sites, max_two_s=2):
    rng = np.random.default_rng(seed)
    two_s = rng.integers(1, max_two_s + 1, size=n_sites)
    sites = tuple(SpinSite(i, int(ts) / 2.0, "A" if i % 2 else "B")
                  for i, ts in enumerate(two_s))
    cluster = SpinCluster("rnd%d" % seed, sites)
    exch = [ExchangeCoupling(i, (i + 1) % n_sites, float(rng.normal(1.0, 0.3)))
            for i in range(n_sites)]
    return SpinModel(cluster=cluster, exchange=tuple(exch))


@pytest.mark.parametrize("seed,n_sites,delta", [
    (1, 4, 0.01), (2, 5, 0.01), (3, 6, 0.01),
    (1, 4, 0.15), (2, 5, 0.15), (4, 6, 0.2),
])
def test_d_lm_matches_brute_force_over_all_partitions(seed, n_sites, delta):
    # polarized-but-not-maximal sectors give entangled, partially
    # distinguishable components, so the partition count is nontrivial
    model = random_small_model(seed, n_sites)
    total = int(model.cluster.two_s.sum())
    two_M = max(total - 4, total % 2)
    psi1 = ground_state_in_sector(model, two_M, None)
    psi2 = ground_state_in_sector(model, -two_M, None)
    res = d_lm(psi1, psi2, delta=delta)
    assert res.n_parts == brute_force_d_lm(psi1, psi2, delta=delta)


def test_d_lm_site_relabel_invariance():
    # alternating s=1 / s=1/2 ring, ground sector S=3/2
    sites = tuple(SpinSite(i, 1.0 if i % 2 == 0 else 0.5, "A" if i % 2 == 0
                           else "B") for i in range(6))
    cluster = SpinCluster("mixed-ring", sites)
    exch = tuple(ExchangeCoupling(i, (i + 1) % 6, 1.0) for i in range(6))
    model = SpinModel(cluster=cluster, exchange=exch)
    opts = SolverOptions(s_hint=1.5)
    psi1 = ground_state_in_sector(model, 3, opts)
    psi2 = ground_state_in_sector(model, -3, opts)
    base = d_lm(psi1, psi2, delta=0.15)

    perm = [3, 0, 5, 1, 4, 2]  # relabeled site i -> perm[i]
    inv = [perm.index(k) for k in range(6)]
    psites = tuple(SpinSite(k, model.cluster.sites[inv[k]].s,
                            model.cluster.sites[inv[k]].sublattice)
                   for k in range(6))
    pcluster = SpinCluster("mixed-ring-perm", psites)
    pexch = tuple(ExchangeCoupling(perm[c.i], perm[c.j], c.J)
                  for c in model.exchange)
    permuted = SpinModel(cluster=pcluster, exchange=pexch)
    q1 = ground_state_in_sector(permuted, 3, opts)
    q2 = ground_state_in_sector(permuted, -3, opts)
    other = d_lm(q1, q2, delta=0.15)
    assert other.n_parts == base.n_parts
    assert other.n_parts >= 2
