"""Disorder-averaged fractional moments of the reduced Green's function.

Realizations are processed in fixed chunks of ``CHUNK`` consecutive indices;
all reductions are pairwise trees over realization order, so results do not
depend on how chunks are scheduled across threads.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .disorder import sample_fields
from .errors import NumericalGuardError, ResonanceError
from .greens import MAX_CONDITION, batched_inverse
from .hamiltonian import resonance_window
from .hopping import HoppingKernel, summability
from .lattice import LatticeBox

log = logging.getLogger(__name__)

CHUNK = 250
MAX_REJECT_FRACTION = 0.01
MIN_REALIZATIONS = 100


def tree_sum(a: np.ndarray) -> np.ndarray:
    """Pairwise sum over axis 0 in a fixed tree order."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:])
    while a.shape[0] > 1:
        n = a.shape[0]
        head = a[0:n - 1:2] + a[1:n:2]
        a = np.concatenate([head, a[n - 1:]]) if n % 2 else head
    return a[0]


def mean_and_se(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = samples.shape[0]
    mean = tree_sum(samples) / n
    var = tree_sum((samples - mean) ** 2) / max(n - 1, 1)
    return mean, np.sqrt(var / n)


def median_of_means(samples: np.ndarray, blocks: int = 10) -> np.ndarray:
    parts = np.array_split(samples, blocks, axis=0)
    return np.median(np.stack([tree_sum(p) / p.shape[0] for p in parts]), axis=0)


@dataclass(frozen=True)
class MomentEstimate:
    """Per-site statistics of ``|G(x, x0; z)|^s`` over disorder realizations.

    ``samples`` keeps the per-realization values for the source column so that
    sums over sites can be given honest error bars; ``pair_mean``/``pair_se``
    cover every site pair when requested.
    """

    box: LatticeBox
    s: float
    z: float
    x0: tuple[int, ...]
    g: float
    omega: float
    rho0: float
    mean: np.ndarray = field(repr=False)
    mom: np.ndarray = field(repr=False)
    se: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    realizations: np.ndarray = field(repr=False)
    n_realizations: int = 0
    rejected: int = 0
    random: bool = True
    pair_mean: np.ndarray | None = field(default=None, repr=False)
    pair_se: np.ndarray | None = field(default=None, repr=False)

    @property
    def g2rho0(self) -> float:
        return self.g * self.g * self.rho0


def _chunk_powers(T: np.ndarray, rho: np.ndarray, shift: float, z: float, s: float,
                  i0: int, max_condition: float, want_pairs: bool):
    A = np.broadcast_to(T, (rho.shape[0],) + T.shape).copy()
    idx = np.arange(T.shape[0])
    A[:, idx, idx] += shift * rho - z
    inv, ok = batched_inverse(A, max_condition)
    powers = np.abs(inv) ** s
    col = powers[:, :, i0]
    return ok, col, (powers if want_pairs else None)


def estimate_moments(box: LatticeBox, kernel: HoppingKernel, g: float, omega: float, rho0: float,
                     z: float, s: float, n_realizations: int, master_seed: int,
                     x0: Sequence[int] | None = None, all_pairs: bool = False,
                     blocks: int = 10, threads: int = 1, first_realization: int = 0,
                     max_condition: float = MAX_CONDITION,
                     min_realizations: int = MIN_REALIZATIONS,
                     field_mode: str = "uniform") -> MomentEstimate:
    """Monte Carlo estimate of ``E|G(x, x0; z)|^s`` for every site ``x``.

    ``field_mode="constant"`` replaces the random densities by ``rho0``
    everywhere; the result is then flagged non-random.
    """
    if field_mode not in ("uniform", "constant"):
        raise ValueError(f"unknown field_mode {field_mode!r}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if n_realizations < min_realizations:
        raise ValueError(f"need at least {min_realizations} realizations, got {n_realizations}")
    if abs(z - omega) < resonance_window(g, rho0):
        raise ResonanceError(f"z={z} inside the resonance window around Omega={omega}")
    x0 = tuple(box.site_at(box.origin)) if x0 is None else tuple(int(c) for c in x0)
    i0 = box.index_of(x0)
    T = kernel.matrix_on(box)
    shift = g * g / (z - omega)
    n = box.n_sites

    def run(ids: np.ndarray):
        if field_mode == "constant":
            rho = np.full((ids.size, n), float(rho0))
        else:
            rho = sample_fields(box, rho0, master_seed, ids)
        return _chunk_powers(T, rho, shift, z, s, i0, max_condition, all_pairs)

    ids_all = first_realization + np.arange(n_realizations)
    chunks = [ids_all[i:i + CHUNK] for i in range(0, n_realizations, CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]

    kept_ids, cols, pair_sums = [], [], []
    rejected = 0
    for ids, (ok, col, pw) in zip(chunks, results):
        rejected += int((~ok).sum())
        kept_ids.append(ids[ok])
        cols.append(col[ok])
        if pw is not None:
            pair_sums.append(pw[ok])
    # Rejected solves are replaced by fresh realizations drawn past the requested range.
    next_id = first_realization + n_realizations
    while sum(len(k) for k in kept_ids) < n_realizations:
        if rejected > MAX_REJECT_FRACTION * n_realizations:
            raise NumericalGuardError(
                f"{rejected} of {n_realizations} solves rejected at z={z} "
                f"(condition > {max_condition:.0e}); energy too close to the spectrum"
            )
        need = n_realizations - sum(len(k) for k in kept_ids)
        ids = next_id + np.arange(need)
        next_id += need
        ok, col, pw = run(ids)
        rejected += int((~ok).sum())
        kept_ids.append(ids[ok])
        cols.append(col[ok])
        if pw is not None:
            pair_sums.append(pw[ok])
    if rejected > MAX_REJECT_FRACTION * n_realizations:
        raise NumericalGuardError(
            f"{rejected} of {n_realizations} solves rejected at z={z}; aborting"
        )
    if rejected:
        log.info("replaced %d near-singular realizations at z=%g", rejected, z)

    samples = np.concatenate(cols)
    mean, se = mean_and_se(samples)
    mom = median_of_means(samples, blocks)
    pair_mean = pair_se = None
    if all_pairs:
        stacked = np.concatenate(pair_sums)
        pair_mean, pair_se = mean_and_se(stacked)
    return MomentEstimate(box=box, s=float(s), z=float(z), x0=x0, g=float(g), omega=float(omega),
                          rho0=float(rho0), mean=mean, mom=mom, se=se, samples=samples,
                          realizations=np.concatenate(kept_ids), n_realizations=n_realizations,
                          rejected=rejected, random=field_mode == "uniform",
                          pair_mean=pair_mean, pair_se=pair_se)


def apriori_bound(s: float, z: float, omega: float, g2rho0: float, diagonal: bool = True) -> float:
    """Right-hand side of the single-site fractional-moment bounds.

    ``(1/(1-s)) (|z-Omega|/g^2 rho0)^s``, with an extra ``4^s`` off the diagonal.
    """
    base = (abs(z - omega) / g2rho0) ** s / (1.0 - s)
    return base if diagonal else 4.0 ** s * base


def apriori_check(est: MomentEstimate, n_se: float = 3.0) -> dict:
    """Compare every site-pair mean with its a priori bound.

    Uses ``pair_mean`` when present, otherwise only the source column.
    """
    diag_rhs = apriori_bound(est.s, est.z, est.omega, est.g2rho0, True)
    off_rhs = apriori_bound(est.s, est.z, est.omega, est.g2rho0, False)
    i0 = est.box.index_of(est.x0)
    if est.pair_mean is not None:
        mean, se = est.pair_mean, est.pair_se
        diag = np.eye(mean.shape[0], dtype=bool)
    else:
        mean, se = est.mean[:, None], est.se[:, None]
        diag = (np.arange(mean.shape[0]) == i0)[:, None]
    rhs = np.where(diag, diag_rhs, off_rhs)
    slack = rhs + n_se * se - mean
    return {
        "diag_rhs": diag_rhs,
        "offdiag_rhs": off_rhs,
        "diag_max_mean": float(mean[diag].max()),
        "offdiag_max_mean": float(mean[~diag].max()) if (~diag).any() else 0.0,
        "diag_pass": bool(np.all(slack[diag] >= 0.0)),
        "offdiag_pass": bool(np.all(slack[~diag] >= 0.0)),
        "worst_slack": float(slack.min()),
        "n_pairs": int(mean.size),
    }


def select_s(kernel: HoppingKernel, z: float, omega: float, g2rho0: float,
             grid: Sequence[float]) -> tuple[float, float, bool]:
    """Exponent minimising the one-step contraction factor; returns (s, r, r < 1)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid.min() <= 0.0 or grid.max() >= 1.0:
        raise ValueError("grid must be a non-empty subset of (0, 1)")
    vals = kernel.offdiagonal_moduli()
    S = (vals[None, :] ** grid[:, None]).sum(axis=1)
    ratio = abs(z - omega) / g2rho0
    with np.errstate(divide="ignore", over="ignore"):
        r = ratio ** grid * S / (1.0 - grid)
    i = int(np.argmin(r))
    return float(grid[i]), float(r[i]), bool(r[i] < 1.0)


def summed_bound(s: float, r: float, z: float, omega: float, g2rho0: float) -> float:
    return (abs(z - omega) / g2rho0) ** s / ((1.0 - s) * (1.0 - r))


def summed_moment_check(estimates: MomentEstimate | Sequence[MomentEstimate],
                        kernel: HoppingKernel, g: float, omega: float, rho0: float,
                        n_se: float = 3.0) -> dict:
    """Sum over sites of the largest per-site mean over a ladder of boxes.

    The error bar is the standard error of the per-realization totals built
    from the same site-to-box assignment, which is exact for paired seeds.
    """
    if isinstance(estimates, MomentEstimate):
        estimates = [estimates]
    estimates = sorted(estimates, key=lambda e: e.box.n_sites)
    if any(not e.random for e in estimates):
        raise ValueError("summed moment bound is a disorder average; refusing a non-random field")
    s = estimates[0].s
    z = estimates[0].z
    if any(e.s != s or e.z != z for e in estimates):
        raise ValueError("ladder estimates must share s and z")
    g2rho0 = g * g * rho0
    r = summability(kernel, s).S_of_s * (abs(z - omega) / g2rho0) ** s / (1.0 - s)
    base = {"s": s, "z": z, "r": r, "ladder": [e.box.L for e in estimates]}
    if r >= 1.0:
        return {**base, "regime": "out-of-regime", "passed": None}
    big = estimates[-1].box
    n_real = min(e.samples.shape[0] for e in estimates)
    best = np.full(big.n_sites, -1.0)
    per_site_cols = np.zeros((n_real, big.n_sites))
    for e in estimates:
        for j, site in enumerate(e.box.sites):
            k = big.index_of(site)
            if e.mean[j] > best[k]:
                best[k] = e.mean[j]
                per_site_cols[:, k] = e.samples[:n_real, j]
    totals = tree_sum(per_site_cols.T)
    lhs, se = mean_and_se(totals)
    lhs, se = float(lhs), float(se)
    rhs = summed_bound(s, r, z, omega, g2rho0)
    return {**base, "regime": "in", "lhs": lhs, "rhs": rhs, "se": se,
            "margin": n_se * se, "passed": bool(lhs <= rhs + n_se * se)}


def decay_profile(est: MomentEstimate, min_bins: int = 5, floor: float = 1e-280
                  ) -> tuple[float, float]:
    """Least-squares slope of log(median-of-means) against l1 distance from the source.

    Returns ``(slope, r_squared)``; sites at equal distance are averaged.
    """
    dist = est.box.l1_from(est.x0)
    values = est.mom
    bins = np.unique(dist)
    means = np.array([values[dist == b].mean() for b in bins])
    keep = np.isfinite(means) & (means > floor)
    if keep.sum() < min_bins:
        raise ValueError(f"only {int(keep.sum())} distance bins above the noise floor; need {min_bins}")
    x = bins[keep].astype(float)
    y = np.log(means[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)
