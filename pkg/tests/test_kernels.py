import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonloc import _kernels
from photonloc._kernels import _fallback

try:
    from photonloc._kernels import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
MASK = (1 << 64) - 1


def splitmix_reference(seed, realization, stream, coords):
    """Plain-integer splitmix64 chain, one value per coordinate row."""
    def mix(z):
        z = (z + 0x9E3779B97F4A7C15) & MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)
    base = mix(mix(mix(seed & MASK) ^ (realization & MASK)) ^ (stream & MASK))
    out = []
    for row in coords:
        h = base
        for c in row:
            h = mix(h ^ (int(c) & MASK))
        out.append((h >> 11) * 2.0 ** -53)
    return np.array(out)


coords_st = st.lists(st.tuples(st.integers(-2 ** 40, 2 ** 40), st.integers(-50, 50)), min_size=1, max_size=20)


@settings(max_examples=50)
@given(st.integers(0, MASK), st.integers(0, 10 ** 9), st.integers(0, 3), coords_st)
def test_fallback_matches_reference(seed, real, stream, coords):
    c = np.array(coords, dtype=np.int64)
    assert np.array_equal(_fallback.keyed_uniform(seed, real, stream, c),
                          splitmix_reference(seed, real, stream, c))


@needs_ext
@settings(max_examples=50)
@given(st.integers(0, MASK), st.integers(0, 10 ** 9), st.integers(0, 3), coords_st)
def test_backends_bit_identical(seed, real, stream, coords):
    c = np.array(coords, dtype=np.int64)
    assert np.array_equal(_fallback.keyed_uniform(seed, real, stream, c),
                          _ckernels.keyed_uniform(seed, real, stream, c))


def test_uniform_range_and_moments():
    c = np.arange(200_000, dtype=np.int64)[:, None]
    u = _kernels.keyed_uniform(5, 0, 0, c)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * (1 / 12 / u.size) ** 0.5
    # lag-one correlation along the coordinate axis
    assert abs(np.corrcoef(u[:-1], u[1:])[0, 1]) < 0.01


def _random_clusters(rng, n):
    v, _ = np.linalg.qr(rng.normal(size=(2 * n, 2 * n)))
    sizes = rng.choice([1, 1, 2, 3], size=2 * n)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    bounds = bounds[bounds <= 2 * n]
    if bounds[-1] != 2 * n:
        bounds = np.append(bounds, 2 * n)
    w = rng.uniform(size=bounds.size - 1)
    w[rng.uniform(size=w.size) < 0.3] = 0.0
    return v, bounds.astype(np.int64), w


def _block_norms_reference(v, bounds, w):
    n = v.shape[0] // 2
    out = np.zeros((n, n))
    for c in range(w.size):
        P = v[:, bounds[c]:bounds[c + 1]] @ v[:, bounds[c]:bounds[c + 1]].T
        for y in range(n):
            for x in range(n):
                out[y, x] += w[c] * np.linalg.norm(P[np.ix_([y, n + y], [x, n + x])], 2)
    return out


@pytest.mark.parametrize("impl", [_fallback, pytest.param(_ckernels, marks=needs_ext)])
def test_block_norms_against_direct(impl, rng):
    n = 6
    v, bounds, w = _random_clusters(rng, n)
    got = impl.weighted_block_norms(v[:n], v[n:], w, bounds)
    assert np.allclose(got, _block_norms_reference(v, bounds, w), atol=1e-13)


@pytest.mark.parametrize("impl", [_fallback, pytest.param(_ckernels, marks=needs_ext)])
def test_sup_block_norm(impl, rng):
    n, nt = 5, 7
    amps = rng.normal(size=(nt, 2 * n, 2)) + 1j * rng.normal(size=(nt, 2 * n, 2))
    best = np.full(n, 0.5)
    impl.sup_block_norm_sq(np.ascontiguousarray(amps), best)
    ref = np.array([max(np.linalg.norm(amps[t][[y, n + y]], 2) ** 2 for t in range(nt)) for y in range(n)])
    assert np.allclose(best, np.maximum(ref, 0.5), rtol=1e-12)


def test_backend_flag():
    assert _kernels.BACKEND in ("cython", "python")
