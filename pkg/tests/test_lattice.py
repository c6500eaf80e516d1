import numpy as np
import pytest
from hypothesis import given, strategies as st

from photonloc.errors import BoxSizeError
from photonloc.lattice import enumerate_box, l1_distance


@pytest.mark.parametrize("d,L,n", [(1, 0, 1), (1, 2, 5), (2, 1, 9), (3, 2, 125)])
def test_site_count(d, L, n):
    assert enumerate_box(d, L).n_sites == n


def test_single_point_box_is_origin():
    box = enumerate_box(1, 0)
    assert box.site_at(0) == (0,)
    assert box.origin == 0


def test_one_dimensional_order():
    assert [s[0] for s in enumerate_box(1, 2).sites] == [-2, -1, 0, 1, 2]


def test_lexicographic_order_2d():
    sites = [tuple(s) for s in enumerate_box(2, 1).sites]
    assert sites == sorted(sites)
    assert sites[0] == (-1, -1) and sites[1] == (-1, 0)


@given(st.integers(1, 3), st.integers(0, 3))
def test_index_bijection(d, L):
    box = enumerate_box(d, L)
    for i in range(box.n_sites):
        assert box.index_of(box.site_at(i)) == i
    assert box.site_at(box.origin) == (0,) * d


@given(st.integers(1, 2), st.integers(0, 4))
def test_nested_boxes(d, L):
    small = {tuple(s) for s in enumerate_box(d, L).sites}
    big = {tuple(s) for s in enumerate_box(d, L + 1).sites}
    assert small < big


def test_deterministic_enumeration():
    a, b = enumerate_box(2, 3), enumerate_box(2, 3)
    assert np.array_equal(a.sites, b.sites)
    assert a == b and hash(a) == hash(b)


def test_sites_read_only():
    with pytest.raises(ValueError):
        enumerate_box(1, 2).sites[0, 0] = 7


def test_size_overflow():
    with pytest.raises(BoxSizeError):
        enumerate_box(3, 50, max_sites=1000)


@pytest.mark.parametrize("d,L", [(0, 1), (1, -1)])
def test_bad_arguments(d, L):
    with pytest.raises(ValueError):
        enumerate_box(d, L)


def test_index_errors():
    box = enumerate_box(1, 2)
    with pytest.raises(KeyError):
        box.index_of((3,))
    with pytest.raises(ValueError):
        box.index_of((0, 0))
    assert not box.contains((3,)) and box.contains((-2,))


@pytest.mark.parametrize("a,b,dist", [((0, 0), (0, 1), 1), ((0,), (0,), 0), ((2, -1), (-1, 1), 5)])
def test_l1_distance(a, b, dist):
    assert l1_distance(a, b) == dist


def test_l1_dimension_mismatch():
    with pytest.raises(ValueError):
        l1_distance((0,), (0, 1))


def test_displacements_and_l1_from():
    box = enumerate_box(2, 1)
    D = box.displacements()
    assert D.shape == (9, 9, 2)
    assert np.array_equal(D[0, 8], [2, 2])
    assert np.array_equal(box.l1_from((0, 0)), np.abs(box.sites).sum(axis=1))
