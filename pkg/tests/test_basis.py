import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincat.basis import (BudgetExceeded, EmptySector, SpinCluster, SpinSite,
                           enumerate_sector, format_half_integer,
                           sector_dimension)
from spincat.models import registry
from spincat.operators import SpinModel


def small_cluster(two_s_list):
    sites = tuple(SpinSite(i, ts / 2.0, "A" if i % 2 == 0 else "B")
                  for i, ts in enumerate(two_s_list))
    return SpinCluster("test", sites)


def brute_force_sector(two_s_list, two_M):
    ranges = [range(-ts, ts + 1, 2) for ts in two_s_list]
    return [cfg for cfg in itertools.product(*ranges) if sum(cfg) == two_M]


def registry_spin_models():
    out = {}
    for key, entry in registry().items():
        if isinstance(entry.model, SpinModel):
            out[key] = entry.model
    return out


def test_sector_dimensions_sum_to_full_dimension():
    for key, model in registry_spin_models().items():
        cluster = model.cluster
        total = int(cluster.two_s.sum())
        dims = [sector_dimension(cluster, two_M)
                for two_M in range(-total, total + 1, 2)]
        assert sum(dims) == cluster.full_dimension, key


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=5), min_size=1, max_size=4),
       st.integers(min_value=-10, max_value=10))
def test_sector_dimension_matches_enumeration(two_s_list, two_M):
    cluster = small_cluster(two_s_list)
    total = sum(two_s_list)
    expected = brute_force_sector(two_s_list, two_M)
    if (two_M + total) % 2 != 0 or abs(two_M) > total:
        with pytest.raises(EmptySector):
            sector_dimension(cluster, two_M)
        return
    assert sector_dimension(cluster, two_M) == len(expected)
    basis = enumerate_sector(cluster, two_M)
    assert sorted(map(tuple, basis.states.tolist())) == sorted(expected)


def test_enumeration_order_and_codes():
    cluster = small_cluster([5, 5, 5, 5])
    basis = enumerate_sector(cluster, 4)
    assert (basis.states.sum(axis=1) == 4).all()
    assert (np.diff(basis.codes.astype(np.int64)) > 0).all()
    for row in basis.states[:: max(1, basis.dim // 17)]:
        idx = basis.index_of(tuple(row))
        assert tuple(basis.states[idx]) == tuple(row)


def test_lookup_flags_absent_codes():
    cluster = small_cluster([1, 1, 1, 1])
    basis = enumerate_sector(cluster, 0)
    present = basis.lookup(basis.codes.copy())
    assert (present == np.arange(basis.dim)).all()
    absent = basis.lookup(np.array([basis.codes.max() + 1], dtype=np.uint64))
    assert absent[0] == -1


def test_empty_sector_errors():
    cluster = small_cluster([5, 5, 5, 5])
    with pytest.raises(EmptySector):
        enumerate_sector(cluster, 21)  # parity
    with pytest.raises(EmptySector):
        enumerate_sector(cluster, 22)  # out of range
    with pytest.raises(EmptySector):
        sector_dimension(cluster, -22)


def test_budget_exceeded():
    cluster = small_cluster([5, 5, 5, 5])
    with pytest.raises(BudgetExceeded):
        enumerate_sector(cluster, 0, budget=10)


def test_enumeration_is_deterministic():
    cluster = registry_spin_models()["fe4"].cluster
    b1 = enumerate_sector(cluster, 10)
    b2 = enumerate_sector(cluster, 10)
    assert b1.state_hash() == b2.state_hash()
    assert (b1.states == b2.states).all()


@given(st.integers(min_value=-40, max_value=40))
def test_format_half_integer(two_m):
    text = format_half_integer(two_m)
    if two_m % 2 == 0:
        assert text == str(two_m // 2)
        assert "/" not in text
    else:
        assert text.endswith("/2")
        assert int(text.split("/")[0]) == two_m


def test_site_validation():
    with pytest.raises(ValueError):
        SpinSite(0, 0.3, "A")
    with pytest.raises(ValueError):
        SpinSite(0, -0.5, "A")
    with pytest.raises(ValueError):
        SpinSite(0, 0.5, "C")
    with pytest.raises(ValueError):
        SpinSite(-1, 0.5, "A")
    with pytest.raises(ValueError):
        SpinCluster("bad", (SpinSite(1, 0.5, "A"),))  # indices must start at 0
    assert SpinSite(0, "3/2", "A").two_s == 3
    assert SpinSite(0, "2", "B").two_s == 4


def test_sublattice_bookkeeping():
    cluster = registry_spin_models()["fe8"].cluster
    assert cluster.sublattice_sites("A") == [0, 1, 2, 3, 4, 5]
    assert cluster.sublattice_sites("B") == [6, 7]
    assert cluster.s_a_max == 15.0
    assert cluster.s_b_max == 5.0
    signs = cluster.sublattice_signs()
    assert signs.tolist() == [1, 1, 1, 1, 1, 1, -1, -1]
    assert cluster.s_total == 20.0
