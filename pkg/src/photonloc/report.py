"""The localization report: one function per check, each returning report rows.

Every right-hand side is evaluated from its bound formula at run time. Rows
carry the worst case over their parameter point, so a row passes only when
every instance, site pair or energy it covers passes.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import ExperimentConfig
from .correlators import (correlator_green_bound_check, correlator_matrices, default_time_grid,
                          dyn_loc_sum, weight_spec)
from .disorder import sample_field
from .errors import ConfigError
from .greens import greens_matrix, schur_diagonal
from .hamiltonian import assemble_H, assemble_K
from .hopping import (HoppingKernel, default_s_grid, half_laplacian_kernel, lambda_T,
                      laplacian_kernel, summability)
from .lattice import enumerate_box
from .moments import apriori_check, estimate_moments, select_s, summed_moment_check
from .multiphoton import (build_tensor_sum, minkowski_deviation, two_excitation_blocks,
                          two_excitation_reference)
from .spectral import block_structure_residual, diagonalize

# Disjoint realization ranges per check keep their disorder independent.
REALIZATION_OFFSET = {
    "schur-identity": 0,
    "eigen-equivalence": 10_000,
    "projector-structure": 20_000,
    "qtilde-ceiling": 30_000,
    "apriori-moment": 100_000,
    "summed-moment": 200_000,
    "corr-green": 300_000,
    "localization-contrast": 400_000,
}


@dataclass(frozen=True)
class ReportRow:
    check: str
    params: dict = field(default_factory=dict)
    lhs: float = 0.0
    rhs: float = 0.0
    margin: float = 0.0
    passed: bool = False

    def params_text(self) -> str:
        return ";".join(f"{k}={_fmt(v)}" for k, v in self.params.items())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "[" + " ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _require_coupling(cfg: ExperimentConfig) -> None:
    if cfg.g <= 0.0:
        raise ConfigError("g: the report panel needs g > 0")


def _kernel(cfg: ExperimentConfig, d: int | None = None) -> HoppingKernel:
    if d is None or d == cfg.d:
        return cfg.kernel_object()
    if cfg.kernel == "half_laplacian":
        return half_laplacian_kernel(d, None, cfg.quad_points)
    return laplacian_kernel(d)


def _lambda(kernel: HoppingKernel) -> float:
    return lambda_T(kernel, default_s_grid(), refine=True)[0]


def check_schur(cfg: ExperimentConfig) -> list[ReportRow]:
    """Schur-complement diagonal against the direct solve."""
    rows = []
    boxes = [(1, 4), (1, 8), (1, 16), (2, 2), (2, 3)]
    per_box = math.ceil(cfg.schur_instances / len(boxes))
    base = REALIZATION_OFFSET["schur-identity"]
    for k, (d, L) in enumerate(boxes):
        box = enumerate_box(d, L)
        kern = _kernel(cfg, d)
        worst = 0.0
        for r in range(per_box):
            fld = sample_field(box, cfg.rho0, cfg.master_seed, base + 1000 * k + r)
            H = assemble_H(box, kern, fld, cfg.g, cfg.omega)
            # Alternate energies below the band, inside it and around Omega.
            z = (-0.5, 1.3, cfg.omega + 0.37, cfg.omega - 0.21)[r % 4]
            G = greens_matrix(H, z)
            for i in range(box.n_sites):
                x = box.site_at(i)
                sd = schur_diagonal(H, z, x)
                worst = max(worst, abs(sd - G[i, i]) / abs(G[i, i]))
        rows.append(ReportRow("schur-identity", {"d": d, "L": L, "instances": per_box},
                              worst, 1e-8, 0.0, worst <= 1e-8))
    return rows


def check_eigen_equivalence(cfg: ExperimentConfig, L: int = 8) -> list[ReportRow]:
    box = enumerate_box(cfg.d, L)
    kern = cfg.kernel_object()
    worst = 0.0
    base = REALIZATION_OFFSET["eigen-equivalence"]
    for r in range(cfg.eigen_instances):
        H = assemble_H(box, kern, sample_field(box, cfg.rho0, cfg.master_seed, base + r),
                       cfg.g, cfg.omega)
        for E in np.linalg.eigvalsh(H.matrix):
            if abs(E - cfg.omega) < H.eps_res:
                continue
            K = assemble_K(H, E)
            sv = np.linalg.svd(K - E * np.eye(box.n_sites), compute_uv=False)
            worst = max(worst, sv[-1] / np.linalg.norm(K, 2))
    return [ReportRow("eigen-equivalence", {"d": cfg.d, "L": L, "instances": cfg.eigen_instances},
                      worst, 1e-8, 0.0, worst <= 1e-8)]


def _normalization_residual(S) -> float:
    H = S.hamiltonian
    worst = 0.0
    for c in range(S.n_clusters):
        dE = S.energies[c] - H.omega
        if abs(dE) < H.eps_res:
            continue
        p = S.photon[:, S.cluster_members(c)]
        phi = p @ p.T
        w = 1.0 + H.g * H.g * H.rho / dE ** 2
        worst = max(worst, float(np.abs(w @ phi ** 2 - np.diag(phi)).max()))
    return worst


def check_projector_structure(cfg: ExperimentConfig) -> list[ReportRow]:
    box = enumerate_box(cfg.d, cfg.structure_L)
    kern = cfg.kernel_object()
    worst_block = worst_norm = 0.0
    base = REALIZATION_OFFSET["projector-structure"]
    for r in range(cfg.structure_instances):
        H = assemble_H(box, kern, sample_field(box, cfg.rho0, cfg.master_seed, base + r),
                       cfg.g, cfg.omega)
        S = diagonalize(H)
        worst_block = max(worst_block, block_structure_residual(S))
        worst_norm = max(worst_norm, _normalization_residual(S))
    p = {"d": cfg.d, "L": cfg.structure_L, "instances": cfg.structure_instances}
    return [ReportRow("projector-structure", p, worst_block, 1e-8, 0.0, worst_block <= 1e-8),
            ReportRow("normalization-identity", p, worst_norm, 1e-8, 0.0, worst_norm <= 1e-8)]


def check_qtilde(cfg: ExperimentConfig) -> list[ReportRow]:
    _require_coupling(cfg)
    box = enumerate_box(cfg.d, cfg.correlator_L)
    kern = cfg.kernel_object()
    spec = weight_spec(kern, cfg.g, cfg.omega, cfg.rho0, cfg.epsilon)
    s = cfg.s_grid[0]
    worst_qt = 0.0
    worst_cs = -np.inf
    base = REALIZATION_OFFSET["qtilde-ceiling"]
    for r in range(cfg.correlator_instances):
        H = assemble_H(box, kern, sample_field(box, cfg.rho0, cfg.master_seed, base + r),
                       cfg.g, cfg.omega)
        m = correlator_matrices(diagonalize(H), spec, s)
        qt, qts = m["Qtilde"], m["Qtilde_s"]
        worst_qt = max(worst_qt, float(qt.max()))
        # modified correlator: Qtilde(y,x) <= sqrt(Qtilde_s(x,y) Qtilde_s(y,x))
        bound = np.sqrt(qts * qts.T)
        scale = max(1.0, float(bound.max()))
        worst_cs = max(worst_cs, float((qt - bound).max()) / scale)
    p = {"L": cfg.correlator_L, "epsilon": cfg.epsilon, "instances": cfg.correlator_instances}
    ceiling = 2.0  # trace of the two-component site projector
    return [
        ReportRow("qtilde-ceiling", p, worst_qt, ceiling, 1e-8, worst_qt <= ceiling + 1e-8),
        ReportRow("modified-cauchy-schwarz", {**p, "s": s}, worst_cs, 0.0, 1e-10, worst_cs <= 1e-10),
    ]


def _panel_energies(cfg: ExperimentConfig, kern: HoppingKernel) -> list[tuple[float, float]]:
    lam = _lambda(kern)
    g2rho0 = cfg.g * cfg.g * cfg.rho0
    return [(f, cfg.omega + f * g2rho0 / lam) for f in cfg.z_fractions]


def check_apriori(cfg: ExperimentConfig) -> list[ReportRow]:
    _require_coupling(cfg)
    kern = cfg.kernel_object()
    box = enumerate_box(cfg.d, cfg.moments_L)
    s = cfg.s_grid[0]
    rows = []
    for k, (frac, z) in enumerate(_panel_energies(cfg, kern)):
        est = estimate_moments(box, kern, cfg.g, cfg.omega, cfg.rho0, z, s, cfg.n_realizations,
                               cfg.master_seed, all_pairs=True, threads=cfg.threads,
                               first_realization=REALIZATION_OFFSET["apriori-moment"] + 20_000 * k)
        chk = apriori_check(est)
        mean, se = est.pair_mean, est.pair_se
        diag = np.eye(mean.shape[0], dtype=bool)
        for label, mask, rhs_val, ok in (("diagonal", diag, chk["diag_rhs"], chk["diag_pass"]),
                                         ("offdiagonal", ~diag, chk["offdiag_rhs"], chk["offdiag_pass"])):
            # report the pair closest to violating its bound
            slack = rhs_val + 3.0 * se - mean
            j = np.flatnonzero(mask.ravel())[np.argmin(slack[mask])]
            rows.append(ReportRow("apriori-moment",
                                  {"part": label, "z_fraction": frac, "z": z, "s": s, "L": cfg.moments_L,
                                   "N": cfg.n_realizations},
                                  float(mean.ravel()[j]), float(rhs_val), float(3.0 * se.ravel()[j]), ok))
    return rows


def check_summed(cfg: ExperimentConfig) -> list[ReportRow]:
    _require_coupling(cfg)
    kern = cfg.kernel_object()
    g2rho0 = cfg.g * cfg.g * cfg.rho0
    rows = []
    for k, (frac, z) in enumerate(_panel_energies(cfg, kern)):
        s, r, _ = select_s(kern, z, cfg.omega, g2rho0, default_s_grid(1e-2))
        # the same realization ids on every box, so the fields are nested
        first = REALIZATION_OFFSET["summed-moment"] + 20_000 * k
        ests = [estimate_moments(enumerate_box(cfg.d, L), kern, cfg.g, cfg.omega, cfg.rho0, z, s,
                                 cfg.n_realizations, cfg.master_seed, threads=cfg.threads,
                                 first_realization=first)
                for L in cfg.ladder]
        res = summed_moment_check(ests, kern, cfg.g, cfg.omega, cfg.rho0)
        p = {"z_fraction": frac, "z": z, "s": s, "r": res["r"], "ladder": list(cfg.ladder),
             "N": cfg.n_realizations}
        if res["passed"] is None:
            rows.append(ReportRow("summed-moment", {**p, "regime": "out"}, math.nan, math.nan, 0.0, False))
        else:
            rows.append(ReportRow("summed-moment", p, res["lhs"], res["rhs"], res["margin"], res["passed"]))
    return rows


def green_pairs(L: int, d: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Ten site pairs from the origin outwards along the first axis."""
    origin = (0,) * d
    steps = [0, 1, 2, 3, 4, 5, 6, 8, 10, 12]
    steps = sorted({min(t, L) for t in steps})
    return [((t,) + (0,) * (d - 1), origin) for t in steps]


def check_corr_green(cfg: ExperimentConfig) -> list[ReportRow]:
    _require_coupling(cfg)
    kern = cfg.kernel_object()
    box = enumerate_box(cfg.d, cfg.green_L)
    s = cfg.s_grid[0]
    spec = weight_spec(kern, cfg.g, cfg.omega, cfg.rho0, cfg.epsilon)
    res = correlator_green_bound_check(box, kern, cfg.g, cfg.omega, cfg.rho0,
                                       green_pairs(cfg.green_L, cfg.d), cfg.green_realizations,
                                       cfg.master_seed, s=s, epsilon=cfg.epsilon,
                                       n_energy=cfg.n_energy, spec=spec,
                                       first_realization=REALIZATION_OFFSET["corr-green"])
    rows = []
    for row in res:
        p = {"y": row["y"], "x": row["x"], "s": s, "L": cfg.green_L, "N": row["n"],
             "n_energy": cfg.n_energy, "quad_err": row["quad_err"]}
        rows.append(ReportRow("corr-green", p, row["lhs"], row["rhs"], row["margin"], row["passed"]))
    return rows


def localization_totals(cfg: ExperimentConfig, g: float, rho0: float, L: int, n_real: int,
                        interval: tuple[float, float], first: int) -> float:
    """Disorder-averaged dynamical localization sum from the origin."""
    kern = cfg.kernel_object()
    box = enumerate_box(cfg.d, L)
    x0 = (0,) * cfg.d
    totals = []
    for r in range(n_real if g > 0.0 else 1):
        fld = sample_field(box, rho0, cfg.master_seed, first + r)
        S = diagonalize(assemble_H(box, kern, fld, g, cfg.omega))
        grid = default_time_grid(S, cfg.t_max, cfg.dt_factor)
        totals.append(dyn_loc_sum(S, interval, x0, grid).total)
    return float(np.mean(totals))


def check_localization_contrast(cfg: ExperimentConfig) -> list[ReportRow]:
    kern = cfg.kernel_object()
    lam = _lambda(kern)
    g2rho0 = cfg.g * cfg.g * cfg.deep_rho0
    radius = g2rho0 / lam
    interval = (cfg.omega - radius, cfg.omega + radius)
    first = REALIZATION_OFFSET["localization-contrast"]
    lo, hi = cfg.dynamics_ladder[0], cfg.dynamics_ladder[-1]
    deep = [localization_totals(cfg, cfg.g, cfg.deep_rho0, L, cfg.dynamics_realizations, interval, first)
            for L in (lo, hi)]
    free = [localization_totals(cfg, 0.0, cfg.deep_rho0, L, 1, interval, first) for L in (lo, hi)]
    deep_change = abs(deep[1] - deep[0]) / deep[0]
    free_growth = (free[1] - free[0]) / free[0]
    p = {"L": [lo, hi], "g2rho0": g2rho0, "radius": radius, "half_bandwidth": kern.norm_bound / 2.0,
         "t_max": cfg.t_max}
    return [
        ReportRow("localization-deep", {**p, "totals": deep, "N": cfg.dynamics_realizations},
                  deep_change, 0.05, 0.0, deep_change <= 0.05),
        ReportRow("localization-free", {**p, "totals": free}, free_growth, 0.5, 0.0, free_growth >= 0.5),
    ]


def _drop_site(H, i: int) -> np.ndarray:
    """One-excitation matrix on the box with site ``i`` removed (both components)."""
    n = H.n_sites
    keep = np.array([j for j in range(2 * n) if j not in (i, n + i)])
    return H.matrix[np.ix_(keep, keep)]


def check_minkowski(cfg: ExperimentConfig) -> list[ReportRow]:
    _require_coupling(cfg)
    kern = laplacian_kernel(1)
    rows = []
    one = enumerate_box(1, 0)
    three = enumerate_box(1, 1)
    H1 = assemble_H(one, kern, sample_field(one, cfg.rho0, cfg.master_seed, 7), cfg.g, cfg.omega)
    H3 = assemble_H(three, kern, sample_field(three, cfg.rho0, cfg.master_seed, 7), cfg.g, cfg.omega)
    # two sites: the three-site box with its left end removed
    cases = ((2, 1, H1.matrix), (2, 2, _drop_site(H3, 0)), (2, 3, H3.matrix), (3, 1, H1.matrix))
    for n, n_sites, h in cases:
        dev = minkowski_deviation(h, n)
        tol = 1e-8 * n * max(1.0, float(np.abs(np.linalg.eigvalsh(h)).max()))
        rows.append(ReportRow("minkowski", {"n": n, "sites": n_sites}, dev, tol, 0.0, dev <= tol))
    gap = float(np.abs(two_excitation_blocks(build_tensor_sum(H3, 2)) - two_excitation_reference(H3)).max())
    rows.append(ReportRow("two-excitation-blocks", {"n": 2, "sites": 3}, gap, 0.0, 1e-12, gap <= 1e-12))
    return rows


def check_half_laplacian(cfg: ExperimentConfig) -> list[ReportRow]:
    k50 = half_laplacian_kernel(1, 50, cfg.quad_points)
    k100 = half_laplacian_kernel(1, 100, cfg.quad_points)
    el0 = k50.element((0,))
    rows = [ReportRow("half-laplacian-origin", {"d": 1}, el0, 4.0 / math.pi, 1e-6,
                      abs(el0 - 4.0 / math.pi) <= 1e-6)]
    n = np.arange(1, 51)
    env = np.array([abs(k50.element((int(t),))) for t in n]) * n ** 2
    # sup over n of the closed-form envelope 4 n^2 / (pi (4 n^2 - 1))
    bound = float(np.max(4.0 * n ** 2 / (math.pi * (4.0 * n ** 2 - 1.0))))
    rows.append(ReportRow("half-laplacian-envelope", {"d": 1, "range": [1, 50]},
                          float(env.max()), bound, 1e-6, env.max() <= bound + 1e-6))
    s50 = summability(k50, 0.9).S_of_s
    s100 = summability(k100, 0.9).S_of_s
    rel = abs(s100 - s50) / s50
    rows.append(ReportRow("half-laplacian-summability", {"s": 0.9, "R": [50, 100]}, rel, 0.01, 0.0,
                          rel <= 0.01))
    return rows


CHECKS: dict[str, Callable[[ExperimentConfig], list[ReportRow]]] = {
    "schur": check_schur,
    "eigen": check_eigen_equivalence,
    "structure": check_projector_structure,
    "qtilde": check_qtilde,
    "apriori": check_apriori,
    "summed": check_summed,
    "corr-green": check_corr_green,
    "localization": check_localization_contrast,
    "minkowski": check_minkowski,
    "half-laplacian": check_half_laplacian,
}


def run_report(cfg: ExperimentConfig, only: list[str] | None = None,
               progress: Callable[[str, float], None] | None = None) -> list[ReportRow]:
    names = list(CHECKS) if only is None else only
    rows: list[ReportRow] = []
    for name in names:
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}; choose from {sorted(CHECKS)}")
        t0 = time.perf_counter()
        rows.extend(CHECKS[name](cfg))
        if progress is not None:
            progress(name, time.perf_counter() - t0)
    return rows
