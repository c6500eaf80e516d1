"""Pure NumPy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature; the keyed generator is bit-identical between the two.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 increment + finaliser; uint64 arithmetic wraps mod 2**64
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def keyed_uniform(master_seed: int, realization: int, stream: int,
                  coords: np.ndarray) -> np.ndarray:
    coords = np.ascontiguousarray(coords, dtype=np.int64)
    n = coords.shape[0]
    with np.errstate(over="ignore"):
        h = np.full(n, np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        h = _mix(h)
        h = _mix(h ^ np.uint64(realization & 0xFFFFFFFFFFFFFFFF))
        h = _mix(h ^ np.uint64(stream & 0xFFFFFFFFFFFFFFFF))
        for k in range(coords.shape[1]):
            h = _mix(h ^ coords[:, k].view(np.uint64))
    return (h >> _S11).astype(np.float64) * _INV53


def _spectral_norm_sq(m00, m01, m10, m11):
    fro = np.abs(m00) ** 2 + np.abs(m01) ** 2 + np.abs(m10) ** 2 + np.abs(m11) ** 2
    det = np.abs(m00 * m11 - m01 * m10) ** 2
    disc = np.sqrt(np.maximum(fro * fro - 4.0 * det, 0.0))
    return 0.5 * (fro + disc)


def weighted_block_norms(v1: np.ndarray, v2: np.ndarray, weights: np.ndarray,
                         bounds: np.ndarray) -> np.ndarray:
    """``Q[y, x] = sum_c w_c || B_c(y, x) ||`` over eigenvalue clusters.

    ``B_c(y, x)`` is the 2x2 block of the cluster projector between sites y
    and x; ``v1``/``v2`` hold the photon/atom rows of the eigenvectors and
    cluster ``c`` owns columns ``bounds[c]:bounds[c+1]``.
    """
    n = v1.shape[0]
    out = np.zeros((n, n))
    sizes = np.diff(bounds)
    single = np.flatnonzero((sizes == 1) & (weights != 0.0))
    if single.size:
        cols = bounds[single]
        amp = np.sqrt(v1[:, cols] ** 2 + v2[:, cols] ** 2)
        out += (amp * weights[single]) @ amp.T
    for c in np.flatnonzero((sizes > 1) & (weights != 0.0)):
        a, b = bounds[c], bounds[c + 1]
        p1, p2 = v1[:, a:b], v2[:, a:b]
        m00 = p1 @ p1.T
        m01 = p1 @ p2.T
        m10 = p2 @ p1.T
        m11 = p2 @ p2.T
        out += weights[c] * np.sqrt(_spectral_norm_sq(m00, m01, m10, m11))
    return out


def sup_block_norm_sq(amps: np.ndarray, best: np.ndarray) -> None:
    """Update ``best[y]`` with ``max_t ||amps[t, (y, N+y), :]||^2`` in place."""
    n = best.shape[0]
    top = amps[:, :n, :]
    bot = amps[:, n:, :]
    vals = _spectral_norm_sq(top[..., 0], top[..., 1], bot[..., 0], bot[..., 1])
    np.maximum(best, vals.max(axis=0), out=best)
