import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from photonloc.errors import ResonanceError
from photonloc.hopping import default_s_grid, laplacian_kernel, r_zs
from photonloc.lattice import enumerate_box
from photonloc.moments import (apriori_bound, apriori_check, decay_profile, estimate_moments,
                               mean_and_se, median_of_means, select_s, summed_bound,
                               summed_moment_check, tree_sum)

K1 = laplacian_kernel(1)


@settings(max_examples=40)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=300))
def test_tree_sum_matches_fsum(xs):
    assert tree_sum(np.array(xs)) == pytest.approx(math.fsum(xs), abs=1e-9)


def test_tree_sum_axis_and_empty():
    a = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(tree_sum(a), a.sum(axis=0))
    assert np.array_equal(tree_sum(np.zeros((0, 3))), np.zeros(3))


def test_mean_se_and_mom():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    m, se = mean_and_se(x)
    assert m == 2.5 and se == pytest.approx(np.std(x, ddof=1) / 2)
    samples = np.concatenate([np.full(10, 1.0), np.full(10, 3.0), [1e6] * 1])
    assert median_of_means(samples[:20], blocks=2) == 2.0
    assert median_of_means(samples, blocks=3) < 10


def single_site_moment(s, z, g, omega, rho0):
    """Exact E|G|^s on one site with T(0,0) = 2 by quadrature over rho."""
    def f(rho):
        return abs(1.0 / (2.0 + g * g * rho / (z - omega) - z)) ** s
    pole = (z - 2.0) * (z - omega) / (g * g)
    pts = [pole] if 0.0 < pole < 2.0 * rho0 else None
    val, _ = integrate.quad(f, 0.0, 2.0 * rho0, points=pts, limit=400)
    return val / (2.0 * rho0)


@pytest.mark.parametrize("z", [2.01, 2.5, 0.7])
def test_single_site_monte_carlo_matches_quadrature(z):
    box = enumerate_box(1, 0)
    est = estimate_moments(box, K1, 1.0, 2.0, 1.0, z, 0.5, 4000, 17)
    exact = single_site_moment(0.5, z, 1.0, 2.0, 1.0)
    assert abs(est.mean[0] - exact) < 4 * est.se[0]


@pytest.mark.parametrize("frac", [0.05, 0.2, 0.5, 2.0])
def test_apriori_bound_holds_exactly_on_one_site(frac):
    z = 2.0 + frac
    exact = single_site_moment(0.5, z, 1.0, 2.0, 1.0)
    assert exact <= apriori_bound(0.5, z, 2.0, 1.0)


def test_apriori_bound_formula():
    assert apriori_bound(0.5, 2.25, 2.0, 1.0) == pytest.approx(1.0)
    assert apriori_bound(0.5, 2.25, 2.0, 1.0, diagonal=False) == pytest.approx(2.0)


def test_determinism_and_threads():
    box = enumerate_box(1, 6)
    a = estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.05, 0.5, 600, 3, all_pairs=True)
    b = estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.05, 0.5, 600, 3, all_pairs=True, threads=3)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.se, b.se)
    assert np.array_equal(a.pair_mean, b.pair_mean)
    assert np.array_equal(a.mean, a.pair_mean[:, box.origin])
    assert a.samples.shape == (600, box.n_sites)
    assert a.realizations.tolist() == list(range(600))


def test_apriori_check_on_box():
    box = enumerate_box(1, 8)
    lam = 14.561
    est = estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.0 + 0.2 / lam, 0.5, 1000, 5, all_pairs=True)
    chk = apriori_check(est)
    assert chk["diag_pass"] and chk["offdiag_pass"]
    assert chk["n_pairs"] == box.n_sites ** 2


def test_validation():
    box = enumerate_box(1, 2)
    with pytest.raises(ValueError):
        estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.1, 1.0, 200, 1)
    with pytest.raises(ValueError):
        estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.1, 0.5, 50, 1)
    with pytest.raises(ResonanceError):
        estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.0, 0.5, 200, 1)
    with pytest.raises(ValueError):
        estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.1, 0.5, 200, 1, field_mode="gauss")


def test_constant_field_refused_by_summed_check():
    box = enumerate_box(1, 2)
    est = estimate_moments(box, K1, 1.0, 2.0, 1.0, 2.01, 0.5, 100, 1, field_mode="constant")
    assert not est.random
    assert np.allclose(est.se, 0.0)
    with pytest.raises(ValueError):
        summed_moment_check(est, K1, 1.0, 2.0, 1.0)


def test_select_s_matches_r_zs():
    z = 2.0 + 0.2 / 14.561
    s, r, ok = select_s(K1, z, 2.0, 1.0, default_s_grid(1e-2))
    assert ok and r == pytest.approx(r_zs(K1, s, z, 2.0, 1.0))
    grid = default_s_grid(1e-2)
    assert r <= min(r_zs(K1, t, z, 2.0, 1.0) for t in grid) + 1e-15
    with pytest.raises(ValueError):
        select_s(K1, z, 2.0, 1.0, [0.5, 1.0])


def test_summed_bound_formula():
    assert summed_bound(0.5, 0.5, 2.25, 2.0, 1.0) == pytest.approx(0.5 / 0.25)


def test_summed_check_regimes():
    z = 2.0 + 0.2 / 14.561
    s, r, _ = select_s(K1, z, 2.0, 1.0, default_s_grid(1e-2))
    ests = [estimate_moments(enumerate_box(1, L), K1, 1.0, 2.0, 1.0, z, s, 400, 9) for L in (4, 8)]
    res = summed_moment_check(ests, K1, 1.0, 2.0, 1.0)
    assert res["regime"] == "in" and res["passed"]
    assert res["lhs"] >= ests[-1].mean.sum() - 1e-12
    far = [estimate_moments(enumerate_box(1, 4), K1, 1.0, 2.0, 1.0, 3.0, 0.5, 200, 9)]
    out = summed_moment_check(far, K1, 1.0, 2.0, 1.0)
    assert out["regime"] == "out-of-regime" and out["passed"] is None
    mixed = [ests[0], estimate_moments(enumerate_box(1, 8), K1, 1.0, 2.0, 1.0, z, 0.4, 400, 9)]
    with pytest.raises(ValueError):
        summed_moment_check(mixed, K1, 1.0, 2.0, 1.0)


def test_decay_profile():
    est = estimate_moments(enumerate_box(1, 10), K1, 1.0, 2.0, 1.0, 2.003, 0.5, 400, 2)
    slope, r2 = decay_profile(est)
    assert slope < -0.5 and r2 > 0.9
    with pytest.raises(ValueError):
        decay_profile(estimate_moments(enumerate_box(1, 1), K1, 1.0, 2.0, 1.0, 2.003, 0.5, 100, 2))
