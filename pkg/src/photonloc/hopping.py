"""Translation-invariant hopping kernels and the fractional summability data.

A kernel is stored as a dense cube ``table`` over displacements
``[-R, R]^d``; ``table[dx + R]`` is ``T(0, dx)``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, special

from .lattice import LatticeBox

IMAG_TOL = 1e-10
SYMMETRY_TOL = 1e-12
DEFAULT_RADIUS = {1: 50, 2: 20}
DEFAULT_QUAD_POINTS = 4096


@dataclass(frozen=True)
class HoppingKernel:
    kind: str
    d: int
    R: int
    table: np.ndarray = field(repr=False, compare=False)
    tail_constant: float = 0.0
    quad_points: int = 0

    def element(self, dx: Sequence[int]) -> float:
        dx = tuple(int(c) for c in dx)
        if len(dx) != self.d:
            raise ValueError(f"displacement {dx} does not have dimension {self.d}")
        if any(abs(c) > self.R for c in dx):
            return 0.0
        return float(self.table[tuple(c + self.R for c in dx)])

    def offdiagonal_moduli(self) -> np.ndarray:
        """|T(0, dx)| for every nonzero dx in the support."""
        vals = np.abs(self.table).copy()
        vals[(self.R,) * self.d] = 0.0
        vals = vals.ravel()
        return vals[vals > 0]

    @property
    def diagonal(self) -> float:
        return float(self.table[(self.R,) * self.d])

    @property
    def norm_bound(self) -> float:
        """Row-sum bound on the operator norm of T."""
        return float(np.abs(self.table).sum())

    def matrix_on(self, box: LatticeBox) -> np.ndarray:
        """Plain truncation of the kernel to ``box`` (no periodic wrap)."""
        if box.d != self.d:
            raise ValueError(f"kernel has d={self.d}, box has d={box.d}")
        disp = box.displacements()
        inside = np.all(np.abs(disp) <= self.R, axis=-1)
        idx = np.clip(disp + self.R, 0, 2 * self.R)
        mat = self.table[tuple(idx[..., k] for k in range(self.d))]
        return np.where(inside, mat, 0.0)


@dataclass(frozen=True)
class SummabilityReport:
    s: float
    S_of_s: float
    finite: bool
    truncation_bound: float = 0.0


def _check_symmetric(table: np.ndarray) -> None:
    flipped = table[(slice(None, None, -1),) * table.ndim]
    if not np.allclose(table, flipped, rtol=0.0, atol=SYMMETRY_TOL):
        raise ValueError("hopping table is not symmetric under dx -> -dx")


def laplacian_kernel(d: int) -> HoppingKernel:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    table = np.zeros((3,) * d)
    centre = (1,) * d
    table[centre] = 2.0 * d
    for i in range(d):
        for step in (0, 2):
            idx = list(centre)
            idx[i] = step
            table[tuple(idx)] = -1.0
    table.setflags(write=False)
    return HoppingKernel(kind="laplacian", d=d, R=1, table=table, tail_constant=1.0)


@functools.lru_cache(maxsize=8)
def _half_laplacian_cube(d: int, R: int, quad_points: int) -> np.ndarray:
    # Trapezoid rule on the periodic grid == inverse DFT of the sampled symbol.
    k = 2.0 * np.pi * np.arange(quad_points) / quad_points
    s1 = 4.0 * np.sin(k / 2.0) ** 2
    h = s1
    for _ in range(d - 1):
        h = np.add.outer(h, s1)
    coeffs = np.fft.ifftn(np.sqrt(h))
    del h
    offsets = np.arange(-R, R + 1) % quad_points
    cube = coeffs[np.ix_(*([offsets] * d))]
    max_imag = float(np.abs(cube.imag).max())
    if max_imag > IMAG_TOL:
        raise ArithmeticError(
            f"half-Laplacian quadrature imaginary part {max_imag:.3e} exceeds {IMAG_TOL}"
        )
    cube = cube.real
    # FFT rounding breaks dx -> -dx symmetry in the last bits; restore it exactly
    flipped = cube[(slice(None, None, -1),) * d]
    return np.ascontiguousarray(0.5 * (cube + flipped))


def half_laplacian_kernel(d: int, R: int | None = None,
                          quad_points: int = DEFAULT_QUAD_POINTS) -> HoppingKernel:
    """Matrix elements of the square root of the discrete Laplacian.

    Elements are obtained from the Fourier symbol ``sqrt(4 sum sin^2(k_i/2))``
    by the trapezoid rule with ``quad_points`` nodes per axis; displacements
    with Euclidean length above ``R`` are dropped.
    """
    if R is None:
        R = DEFAULT_RADIUS.get(d, 10)
    if R < 1:
        raise ValueError(f"truncation radius must be >= 1, got {R}")
    if quad_points < 4 * R:
        raise ValueError(f"quad_points={quad_points} too coarse for R={R}")
    table = _half_laplacian_cube(d, R, quad_points).copy()
    grid = np.indices((2 * R + 1,) * d) - R
    radius = np.sqrt((grid ** 2).sum(axis=0))
    table[radius > R] = 0.0
    _check_symmetric(table)
    off = radius > 0
    tail = float(np.max(np.abs(table[off]) * radius[off] ** (d + 1)))
    table.setflags(write=False)
    return HoppingKernel(kind="half_laplacian", d=d, R=R, table=table,
                         tail_constant=tail, quad_points=quad_points)


def custom_kernel(entries: Iterable[tuple[Sequence[int], float]], d: int) -> HoppingKernel:
    entries = [(tuple(int(c) for c in dx), float(v)) for dx, v in entries]
    if not entries:
        raise ValueError("custom kernel needs at least one entry")
    for dx, _ in entries:
        if len(dx) != d:
            raise ValueError(f"displacement {dx} does not have dimension {d}")
    R = max(max(abs(c) for c in dx) for dx, _ in entries)
    R = max(R, 1)
    table = np.zeros((2 * R + 1,) * d)
    seen = set()
    for dx, v in entries:
        if dx in seen:
            raise ValueError(f"duplicate displacement {dx}")
        seen.add(dx)
        table[tuple(c + R for c in dx)] = v
    _check_symmetric(table)
    grid = np.indices(table.shape) - R
    radius = np.sqrt((grid ** 2).sum(axis=0))
    off = radius > 0
    tail = float(np.max(np.abs(table[off]) * radius[off] ** (d + 1))) if off.any() else 0.0
    table.setflags(write=False)
    return HoppingKernel(kind="custom", d=d, R=R, table=table, tail_constant=tail)


def load_kernel_table(path: str | Path, d: int) -> HoppingKernel:
    """Read a custom kernel from whitespace separated ``dx_1 .. dx_d value`` lines.

    Blank lines and ``#`` comments are ignored. Asymmetric tables are rejected.
    """
    entries = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != d + 1:
            raise ValueError(f"{path}:{lineno}: expected {d + 1} columns, got {len(parts)}")
        entries.append((tuple(int(p) for p in parts[:d]), float(parts[d])))
    return custom_kernel(entries, d)


def _tail_bound(kernel: HoppingKernel, s: float) -> float:
    """Upper bound on the dropped sum c_d * sum_{|dx|>R} |dx|^{-(d+1)s}."""
    if kernel.kind in ("laplacian", "custom"):
        return 0.0
    d, R = kernel.d, kernel.R
    p = (d + 1) * s
    if p <= d:
        return math.inf
    shell = 2.0 * math.pi ** (d / 2) / special.gamma(d / 2)
    half_diag = math.sqrt(d) / 2.0
    inflate = (1.0 + half_diag / R) ** p
    return kernel.tail_constant * inflate * shell * (R - half_diag) ** (d - p) / (p - d)


def summability(kernel: HoppingKernel, s: float) -> SummabilityReport:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    vals = kernel.offdiagonal_moduli()
    total = float(np.sum(vals ** s))
    if kernel.kind == "half_laplacian":
        finite = s > kernel.d / (kernel.d + 1)
    else:
        finite = True
    return SummabilityReport(s=s, S_of_s=total, finite=finite,
                             truncation_bound=_tail_bound(kernel, s))


def _S(vals: np.ndarray, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return (vals[None, :] ** s[:, None]).sum(axis=1)


def lambda_objective(kernel: HoppingKernel, s) -> np.ndarray:
    """``(S(s) / (1 - s)) ** (1 / s)`` evaluated at each ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    vals = kernel.offdiagonal_moduli()
    with np.errstate(over="ignore"):
        return (_S(vals, s) / (1.0 - s)) ** (1.0 / s)


def lambda_T(kernel: HoppingKernel, s_grid: Sequence[float],
             refine: bool = False) -> tuple[float, float]:
    """Minimum of the lambda objective over ``s_grid``; returns (lambda, s_star).

    With ``refine=True`` the grid minimum is polished by a bounded scalar
    minimisation between the neighbouring grid points.
    """
    grid = np.sort(np.asarray(s_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("s_grid is empty")
    if grid[0] <= 0.0 or grid[-1] >= 1.0:
        raise ValueError("s_grid must lie inside (0, 1)")
    vals = lambda_objective(kernel, grid)
    i = int(np.argmin(vals))
    lam, s_star = float(vals[i]), float(grid[i])
    if refine and grid.size > 2:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        res = optimize.minimize_scalar(lambda t: float(lambda_objective(kernel, t)[0]),
                                       bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10})
        if res.success and res.fun < lam:
            lam, s_star = float(res.fun), float(res.x)
    return lam, s_star


def r_zs(kernel: HoppingKernel, s: float, z: float, omega: float, g2rho0: float) -> float:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if g2rho0 <= 0.0:
        raise ValueError("g^2 rho0 must be positive")
    S = summability(kernel, s).S_of_s
    return (abs(z - omega) / g2rho0) ** s * S / (1.0 - s)


def default_s_grid(step: float = 1e-3) -> np.ndarray:
    n = int(round(1.0 / step))
    # rounded so grid points print as the decimals they stand for
    return np.round(np.arange(1, n) * step, 12)
