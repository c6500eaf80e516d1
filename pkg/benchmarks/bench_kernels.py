"""Compare the compiled and NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall time per kernel and the speed-up of the compiled
backend. Exits with an error if the extension is not built.
"""
import argparse
import timeit

import numpy as np

from photonloc._kernels import _fallback

try:
    from photonloc._kernels import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def cases(rng):
    coords = np.stack(np.meshgrid(np.arange(-64, 65), np.arange(-64, 65), indexing="ij"), -1)
    coords = coords.reshape(-1, 2).astype(np.int64)
    n = 101
    v, _ = np.linalg.qr(rng.normal(size=(2 * n, 2 * n)))
    sizes = rng.choice([1, 1, 1, 2], size=200)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    bounds = bounds[bounds <= 2 * n]
    cols = bounds[-1]
    w = rng.uniform(size=bounds.size - 1)
    amps = np.ascontiguousarray(rng.normal(size=(256, 2 * n, 2)) + 1j * rng.normal(size=(256, 2 * n, 2)))
    return {
        "keyed_uniform (16641 sites, d=2)": lambda m: m.keyed_uniform(42, 7, 0, coords),
        "weighted_block_norms (n=101)": lambda m: m.weighted_block_norms(
            v[:n, :cols], v[n:, :cols], w, bounds),
        "sup_block_norm_sq (256 x 101)": lambda m: m.sup_block_norm_sq(amps, np.zeros(n)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:40s} {1e3 * t_py:11.2f} {1e3 * t_c:12.2f} {t_py / t_c:9.1f}")


if __name__ == "__main__":
    main()
