"""Command line entry point.

Exit status: 0 success, 1 a report check failed, 2 invalid configuration,
3 a numerical guard tripped.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ExperimentConfig, load_config
from .correlators import correlator_matrices, default_time_grid, dyn_loc_sum, weight_spec
from .disorder import sample_field
from .errors import BoxSizeError, BudgetError, ConfigError, NumericalGuardError
from .greens import greens_via_K
from .hamiltonian import assemble_H
from .hopping import default_s_grid, lambda_T
from .lattice import enumerate_box
from .moments import apriori_check, estimate_moments, select_s, summed_moment_check
from .multiphoton import build_tensor_sum, minkowski_sums
from .report import REALIZATION_OFFSET, run_report
from .spectral import diagonalize

log = logging.getLogger("photonloc")

EXIT_OK, EXIT_FAILED_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    return v


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else _num(x) for x in row])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _site_header(d: int) -> list[str]:
    return [f"x{i + 1}[site]" for i in range(d)]


def _radius(cfg: ExperimentConfig, kern) -> float:
    lam, _ = lambda_T(kern, default_s_grid(), refine=True)
    return cfg.g * cfg.g * cfg.rho0 / lam


def _need_coupling(cfg: ExperimentConfig, what: str) -> None:
    if cfg.g <= 0.0:
        raise ConfigError(f"g: {what} needs g > 0")


def cmd_spectrum(cfg, args, out: Path) -> dict:
    L = cfg.ladder[0] if args.L is None else args.L
    box = enumerate_box(cfg.d, L)
    H = assemble_H(box, cfg.kernel_object(), sample_field(box, cfg.rho0, cfg.master_seed,
                                                          args.realization), cfg.g, cfg.omega)
    S = diagonalize(H)
    photon = (S.photon ** 2).sum(axis=0)
    write_csv(out / "spectrum.csv", ["index", "eigenvalue[energy]", "photon_weight[1]"],
              ((i, e, p) for i, (e, p) in enumerate(zip(S.eigenvalues, photon))))
    return {"L": L, "n_sites": box.n_sites, "realization": args.realization,
            "n_eigenvalues": int(S.eigenvalues.size), "n_clusters": int(S.n_clusters)}


def cmd_greens(cfg, args, out: Path) -> dict:
    kern = cfg.kernel_object()
    L = cfg.ladder[0] if args.L is None else args.L
    box = enumerate_box(cfg.d, L)
    z = args.z
    if z is None:
        _need_coupling(cfg, "the default energy")
        z = cfg.omega + cfg.z_fractions[0] * _radius(cfg, kern)
    H = assemble_H(box, kern, sample_field(box, cfg.rho0, cfg.master_seed, args.realization),
                   cfg.g, cfg.omega)
    x0 = box.site_at(box.origin)
    G = greens_via_K(H, z, x0)
    write_csv(out / "greens.csv", _site_header(cfg.d) + ["G[1/energy]"],
              (list(box.site_at(i)) + [G.values[i]] for i in range(box.n_sites)))
    return {"L": L, "z": z, "x0": list(x0), "realization": args.realization, "condition": G.condition}


def cmd_moments(cfg, args, out: Path) -> dict:
    _need_coupling(cfg, "moments")
    kern = cfg.kernel_object()
    radius = _radius(cfg, kern)
    g2rho0 = cfg.g * cfg.g * cfg.rho0
    rows, checks = [], []
    for frac in cfg.z_fractions:
        z = cfg.omega + frac * radius
        for s in cfg.s_grid:
            ests = []
            for L in cfg.ladder:
                est = estimate_moments(enumerate_box(cfg.d, L), kern, cfg.g, cfg.omega, cfg.rho0, z, s,
                                       cfg.n_realizations, cfg.master_seed, threads=cfg.threads)
                ests.append(est)
                for i in range(est.box.n_sites):
                    rows.append([L, z, s] + list(est.box.site_at(i)) +
                                [est.mean[i], est.se[i], est.mom[i]])
            ap = apriori_check(ests[-1])
            s_sel, r, ok = select_s(kern, z, cfg.omega, g2rho0, default_s_grid(1e-2))
            summed = summed_moment_check(ests, kern, cfg.g, cfg.omega, cfg.rho0)
            checks.append({"z": z, "s": s, "apriori": ap, "summed": summed,
                           "select_s": {"s": s_sel, "r": r, "in_regime": ok}})
    write_csv(out / "moments.csv",
              ["L[site]", "z[energy]", "s[1]"] + _site_header(cfg.d) + ["mean[1]", "se[1]", "median_of_means[1]"],
              rows)
    return {"x0": "origin", "N": cfg.n_realizations, "checks": checks}


def cmd_correlator(cfg, args, out: Path) -> dict:
    _need_coupling(cfg, "correlators")
    kern = cfg.kernel_object()
    L = cfg.correlator_L if args.L is None else args.L
    box = enumerate_box(cfg.d, L)
    spec = weight_spec(kern, cfg.g, cfg.omega, cfg.rho0, cfg.epsilon)
    s = cfg.s_grid[0]
    H = assemble_H(box, kern, sample_field(box, cfg.rho0, cfg.master_seed, args.realization),
                   cfg.g, cfg.omega)
    m = correlator_matrices(diagonalize(H), spec, s)
    i0 = box.origin
    write_csv(out / "correlator.csv", _site_header(cfg.d) + ["Q[1]", "Qtilde[1]", "Qtilde_s[1]"],
              (list(box.site_at(i)) + [m["Q"][i, i0], m["Qtilde"][i, i0], m["Qtilde_s"][i, i0]]
               for i in range(box.n_sites)))
    return {"L": L, "s": s, "epsilon": cfg.epsilon, "interval": list(spec.interval),
            "realization": args.realization, "max_Qtilde": float(m["Qtilde"].max())}


def cmd_dynamics(cfg, args, out: Path) -> dict:
    _need_coupling(cfg, "the dynamics window")
    kern = cfg.kernel_object()
    radius = _radius(cfg, kern)
    interval = (cfg.omega - radius, cfg.omega + radius)
    rows, totals = [], {}
    for L in cfg.dynamics_ladder:
        box = enumerate_box(cfg.d, L)
        H = assemble_H(box, kern, sample_field(box, cfg.rho0, cfg.master_seed, args.realization),
                       cfg.g, cfg.omega)
        S = diagonalize(H)
        probe = dyn_loc_sum(S, interval, (0,) * cfg.d, default_time_grid(S, cfg.t_max, cfg.dt_factor))
        totals[str(L)] = probe.total
        rows.extend([L] + list(box.site_at(i)) + [probe.per_site[i]] for i in range(box.n_sites))
    write_csv(out / "dynamics.csv", ["L[site]"] + _site_header(cfg.d) + ["sup_norm_sq[1]"], rows)
    return {"interval": list(interval), "t_max": cfg.t_max, "dt_factor": cfg.dt_factor,
            "realization": args.realization, "totals": totals}


def cmd_multiphoton(cfg, args, out: Path) -> dict:
    box = enumerate_box(cfg.d, args.L)
    H = assemble_H(box, cfg.kernel_object(), sample_field(box, cfg.rho0, cfg.master_seed,
                                                          args.realization), cfg.g, cfg.omega)
    Hn = build_tensor_sum(H, args.n)
    ev_n = np.linalg.eigvalsh(Hn.matrix)
    sums = minkowski_sums(np.linalg.eigvalsh(H.matrix), args.n)
    write_csv(out / "multiphoton.csv", ["index", "eigenvalue[energy]", "minkowski_sum[energy]"],
              ((i, a, b) for i, (a, b) in enumerate(zip(ev_n, sums))))
    return {"n": args.n, "L": args.L, "dimension": Hn.dimension,
            "max_deviation": float(np.abs(ev_n - sums).max())}


def cmd_report(cfg, args, out: Path) -> dict:
    only = args.only.split(",") if args.only else None
    rows = run_report(cfg, only, progress=lambda n, t: log.info("check %s finished in %.1fs", n, t))
    write_csv(out / "report.csv", ["check", "params", "lhs", "rhs", "margin", "passed"],
              ([r.check, r.params_text(), r.lhs, r.rhs, r.margin, r.passed] for r in rows))
    return {"rows": [{"check": r.check, "params": r.params, "lhs": r.lhs, "rhs": r.rhs,
                      "margin": r.margin, "passed": r.passed} for r in rows],
            "all_passed": all(r.passed for r in rows),
            "realization_offsets": REALIZATION_OFFSET}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "greens": cmd_greens,
    "moments": cmd_moments,
    "correlator": cmd_correlator,
    "dynamics": cmd_dynamics,
    "multiphoton": cmd_multiphoton,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config (default: built-in panel)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
    common.add_argument("--threads", type=int, metavar="N", help="worker threads (overrides threads)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides master_seed)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="photonloc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("spectrum", parents=[common], help="eigenvalues of one realization")
    sp.add_argument("--L", type=int)
    sp.add_argument("--realization", type=int, default=0)
    sp = sub.add_parser("greens", parents=[common], help="Green's function column from the origin")
    sp.add_argument("--L", type=int)
    sp.add_argument("--z", type=float)
    sp.add_argument("--realization", type=int, default=0)
    sub.add_parser("moments", parents=[common], help="fractional moments over the box ladder")
    sp = sub.add_parser("correlator", parents=[common], help="eigenfunction correlators of one realization")
    sp.add_argument("--L", type=int)
    sp.add_argument("--realization", type=int, default=0)
    sp = sub.add_parser("dynamics", parents=[common], help="dynamical localization sums")
    sp.add_argument("--realization", type=int, default=0)
    sp = sub.add_parser("multiphoton", parents=[common], help="n-excitation spectrum")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--L", type=int, default=0)
    sp.add_argument("--realization", type=int, default=0)
    sp = sub.add_parser("report", parents=[common], help="run the full acceptance panel")
    sp.add_argument("--only", metavar="CHECKS", help="comma separated subset of checks")
    return p


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.seed is not None:
        changes["master_seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = _resolve_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, args, out)
    except (ConfigError, BoxSizeError, BudgetError) as exc:
        print(f"photonloc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"photonloc: numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    (out / "config.used").write_text(cfg.as_text())
    (out / "seeds.txt").write_text(
        f"master_seed = {cfg.master_seed}\ncommand = {args.command}\n"
        + "".join(f"offset.{k} = {v}\n" for k, v in REALIZATION_OFFSET.items())
        + "".join(f"{k} = {getattr(args, k)}\n" for k in ("realization",) if hasattr(args, k)))
    write_json(out / "summary.json", {"command": args.command, "result": result})
    if args.command == "report" and not result["all_passed"]:
        failed = sorted({r["check"] for r in result["rows"] if not r["passed"]})
        print(f"photonloc: failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILED_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
