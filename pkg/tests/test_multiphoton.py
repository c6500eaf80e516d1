import numpy as np
import pytest

from photonloc.errors import BudgetError
from photonloc.multiphoton import (build_tensor_sum, eigenvalue_table, minkowski_check,
                                   minkowski_deviation, minkowski_scale, minkowski_sums,
                                   tensor_dimension, two_excitation_blocks,
                                   two_excitation_reference)


def test_single_site_two_excitations(ham):
    H = ham(L=0)
    Hn = build_tensor_sum(H, 2)
    h = H.matrix
    assert Hn.dimension == 4
    assert np.allclose(Hn.matrix, np.kron(h, np.eye(2)) + np.kron(np.eye(2), h))
    assert np.trace(Hn.matrix) == pytest.approx(2 * 2 * np.trace(h))


@pytest.mark.parametrize("L,n", [(0, 2), (0, 3), (1, 2), (1, 3)])
def test_minkowski_spectrum(ham, L, n):
    H = ham(L=L, seed=3)
    assert minkowski_check(H, n) <= 1e-8 * minkowski_scale(H, n)


def test_three_site_spectrum_size(ham):
    H = ham(L=1)
    Hn = build_tensor_sum(H, 2)
    ev = eigenvalue_table(Hn)
    assert ev.size == 36 == tensor_dimension(H, 2)
    assert np.allclose(ev, minkowski_sums(np.linalg.eigvalsh(H.matrix), 2))


def test_two_site_submatrix():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(4, 4))
    h = a + a.T
    assert minkowski_deviation(h, 2) < 1e-12
    assert minkowski_deviation(h, 3) < 1e-12


def test_trace_identity(ham):
    H = ham(L=1)
    for n in (2, 3):
        Hn = build_tensor_sum(H, n)
        m = 2 * H.n_sites
        assert np.trace(Hn.matrix) == pytest.approx(n * m ** (n - 1) * np.trace(H.matrix))


def test_block_pattern(ham):
    H = ham(L=1, seed=8)
    blocks = two_excitation_blocks(build_tensor_sum(H, 2))
    assert np.array_equal(blocks, two_excitation_reference(H))
    N2 = H.n_sites ** 2
    assert not blocks[:N2, 3 * N2:].any()
    assert not blocks[N2:2 * N2, 2 * N2:3 * N2].any()
    assert np.allclose(blocks[3 * N2:, 3 * N2:], 2 * H.omega * np.eye(N2))


def test_free_photon_limit(ham):
    H = ham(L=1, g=0.0)
    ev = eigenvalue_table(build_tensor_sum(H, 2))
    assert np.sum(np.isclose(ev, 2 * H.omega)) >= H.n_sites ** 2


def test_budget_and_n(ham):
    H = ham(L=5)
    with pytest.raises(BudgetError):
        build_tensor_sum(H, 3)
    with pytest.raises(BudgetError):
        build_tensor_sum(H, 2, max_dimension=10)
    with pytest.raises(ValueError):
        build_tensor_sum(H, 1)
    Hn = build_tensor_sum(ham(L=0), 2)
    with pytest.raises(ValueError):
        Hn.matrix[0, 0] = 1.0
    with pytest.raises(ValueError):
        two_excitation_blocks(build_tensor_sum(ham(L=0), 3))
