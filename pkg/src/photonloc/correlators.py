"""Eigenfunction correlators, their Green's function bound, and dynamics probes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import _kernels
from .disorder import sample_field
from .errors import NumericalGuardError
from .greens import MAX_CONDITION, batched_inverse
from .hamiltonian import assemble_H, resonance_window
from .hopping import HoppingKernel, default_s_grid, lambda_T
from .lattice import LatticeBox
from .moments import mean_and_se
from .spectral import SpectralData, diagonalize

DEFAULT_EPSILON = 0.5


@dataclass(frozen=True)
class WeightSpec:
    """Weight ``W(E) = min((|E-Omega|/g^2 rho0)^eps, 1)`` on the open interval
    ``|E - Omega| < radius`` and zero elsewhere."""

    omega: float
    g2rho0: float
    epsilon: float
    radius: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.omega - self.radius, self.omega + self.radius


def weight_spec(kernel: HoppingKernel, g: float, omega: float, rho0: float,
                epsilon: float = DEFAULT_EPSILON, s_grid: Sequence[float] | None = None) -> WeightSpec:
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    g2rho0 = g * g * rho0
    if g2rho0 <= 0.0:
        raise ValueError("weight needs g^2 rho0 > 0")
    lam, _ = lambda_T(kernel, default_s_grid() if s_grid is None else s_grid, refine=True)
    return WeightSpec(float(omega), float(g2rho0), float(epsilon), g2rho0 / lam)


def weight(E, spec: WeightSpec, closed: bool = False):
    """``W(E)``; ``closed=True`` includes the interval end points (one-sided limit)."""
    E = np.asarray(E, dtype=float)
    d = np.abs(E - spec.omega)
    inside = d <= spec.radius if closed else d < spec.radius
    w = np.where(inside, np.minimum((d / spec.g2rho0) ** spec.epsilon, 1.0), 0.0)
    return w if w.ndim else float(w)


def weight_g(E, spec: WeightSpec, closed: bool = False):
    """``W(E) (1 + g^2 rho0 / (E - Omega)^2)``, taken as 0 where W vanishes."""
    E = np.asarray(E, dtype=float)
    w = np.asarray(weight(E, spec, closed))
    d2 = (E - spec.omega) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        wg = np.where(w > 0.0, w * (1.0 + spec.g2rho0 / d2), 0.0)
    return wg if wg.ndim else float(wg)


@dataclass(frozen=True)
class CorrelatorTable:
    x0: tuple[int, ...]
    Q: np.ndarray = field(repr=False)
    Qtilde: np.ndarray = field(repr=False)
    Qtilde_s: np.ndarray = field(repr=False)
    s: float = 0.5


def correlator_matrices(S: SpectralData, spec: WeightSpec, s: float | None = None
                        ) -> dict[str, np.ndarray]:
    """All-pairs correlators; ``out[name][y, x]``.

    ``Q`` uses the spectral norm of each 2x2 projector block, ``Qtilde`` the
    photon entry with weight ``W_g`` and ``Qtilde_s`` its fractional variant.
    """
    W = np.asarray(weight(S.energies, spec))
    Wg = np.asarray(weight_g(S.energies, spec))
    active = np.flatnonzero(W > 0.0)
    n = S.n_sites
    if active.size == 0:
        zero = np.zeros((n, n))
        out = {"Q": zero, "Qtilde": zero.copy()}
        if s is not None:
            out["Qtilde_s"] = zero.copy()
        return out
    # Reindex the active clusters into a compact column range for the kernel.
    cols = np.concatenate([np.arange(S.bounds[c], S.bounds[c + 1]) for c in active])
    sizes = np.diff(S.bounds)[active]
    bounds = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    v = S.eigenvectors[:, cols]
    Q = _kernels.weighted_block_norms(np.ascontiguousarray(v[:n]), np.ascontiguousarray(v[n:]),
                                      np.ascontiguousarray(W[active]), bounds)
    Qt = np.zeros((n, n))
    Qts = np.zeros((n, n)) if s is not None else None
    for k, c in enumerate(active):
        p = v[:n, bounds[k]:bounds[k + 1]]
        phi = p @ p.T
        Qt += Wg[c] * np.abs(phi)
        if Qts is not None:
            diag = np.clip(np.diag(phi), 0.0, None)
            Qts += Wg[c] * np.abs(phi) ** s * diag[None, :] ** (1.0 - s)
    out = {"Q": Q, "Qtilde": Qt}
    if Qts is not None:
        out["Qtilde_s"] = Qts
    return out


def correlator_table(S: SpectralData, spec: WeightSpec, x0: Sequence[int], s: float = 0.5
                     ) -> CorrelatorTable:
    m = correlator_matrices(S, spec, s)
    i = S.hamiltonian.box.index_of(x0)
    return CorrelatorTable(tuple(int(c) for c in x0), m["Q"][:, i], m["Qtilde"][:, i],
                           m["Qtilde_s"][:, i], s)


def correlator_Q(S: SpectralData, spec: WeightSpec, y: Sequence[int], x: Sequence[int]) -> float:
    box = S.hamiltonian.box
    iy, ix = box.index_of(y), box.index_of(x)
    n = S.n_sites
    total = 0.0
    for c in range(S.n_clusters):
        w = weight(S.energies[c], spec)
        if w == 0.0:
            continue
        v = S.eigenvectors[:, S.cluster_members(c)]
        block = v[[iy, n + iy]] @ v[[ix, n + ix]].T
        total += w * np.linalg.norm(block, 2)
    return float(total)


def correlator_Qtilde(S: SpectralData, spec: WeightSpec, y: Sequence[int], x: Sequence[int]) -> float:
    box = S.hamiltonian.box
    iy, ix = box.index_of(y), box.index_of(x)
    total = 0.0
    for c in range(S.n_clusters):
        wg = weight_g(S.energies[c], spec)
        if wg == 0.0:
            continue
        p = S.photon[:, S.cluster_members(c)]
        total += wg * abs(float(p[iy] @ p[ix]))
    return total


def correlator_Qtilde_s(S: SpectralData, spec: WeightSpec, s: float,
                        y: Sequence[int], x: Sequence[int]) -> float:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    box = S.hamiltonian.box
    iy, ix = box.index_of(y), box.index_of(x)
    total = 0.0
    for c in range(S.n_clusters):
        wg = weight_g(S.energies[c], spec)
        if wg == 0.0:
            continue
        p = S.photon[:, S.cluster_members(c)]
        phi_yx = abs(float(p[iy] @ p[ix]))
        phi_xx = float(p[ix] @ p[ix])
        total += wg * phi_yx ** s * phi_xx ** (1.0 - s)
    return total


# -- correlator versus Green's function ----------------------------------------------------

def _energy_nodes(spec: WeightSpec, n_energy: int, eps_res: float):
    """Nodes on both halves of the interval, graded as ``E = Omega +- radius * u^2``.

    The substitution removes the integrable singularity of the integrand at
    Omega. Returns energies, trapezoid weights and Simpson weights in E.
    """
    m = n_energy // 2
    u_min = np.sqrt(eps_res / spec.radius)
    u = np.linspace(u_min, 1.0, m)
    jac = 2.0 * spec.radius * u
    eye = np.eye(m)
    trap = integrate.trapezoid(eye, u, axis=1) * jac
    simp = integrate.simpson(eye, x=u, axis=1) * jac
    E = np.concatenate([spec.omega - spec.radius * u ** 2, spec.omega + spec.radius * u ** 2])
    return E, np.concatenate([trap, trap]), np.concatenate([simp, simp]), u_min


def correlator_green_bound_check(box: LatticeBox, kernel: HoppingKernel, g: float, omega: float,
                                 rho0: float, pairs: Sequence[tuple[Sequence[int], Sequence[int]]],
                                 n_realizations: int, master_seed: int, s: float = 0.5,
                                 epsilon: float = DEFAULT_EPSILON, n_energy: int = 40,
                                 n_se: float = 3.0, spec: WeightSpec | None = None,
                                 max_condition: float = MAX_CONDITION,
                                 first_realization: int = 0) -> list[dict]:
    """Disorder-averaged ``Q(y,x;W)`` against the energy integral of ``E|G|^s``.

    Both sides use the same realizations; the error bar is the standard error
    of the paired per-realization difference. The quadrature error is the
    trapezoid/Simpson gap plus an estimate of the excised resonance window.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    spec = weight_spec(kernel, g, omega, rho0, epsilon) if spec is None else spec
    eps_res = resonance_window(g, rho0)
    E, w_trap, w_simp, u_min = _energy_nodes(spec, n_energy, eps_res)
    factor = np.abs((E - omega) / (2.0 * spec.g2rho0)) ** (1.0 - s) * weight_g(E, spec, closed=True)
    idx = np.array([[box.index_of(y), box.index_of(x)] for y, x in pairs])
    T = kernel.matrix_on(box)
    n = box.n_sites
    diag = np.arange(n)

    m = E.size // 2
    # Integrand in the graded variable u; bounded when the substitution works.
    jac_u = 2.0 * spec.radius * np.sqrt(np.abs(E - omega) / spec.radius)
    u_peak = np.zeros(len(pairs))
    lhs_samples, trap_samples, simp_samples, edge_samples = [], [], [], []
    rejected = 0
    r = first_realization
    while len(lhs_samples) < n_realizations:
        fld = sample_field(box, rho0, master_seed, r)
        r += 1
        A = np.broadcast_to(T, (E.size, n, n)).copy()
        A[:, diag, diag] += (g * g / (E - omega))[:, None] * fld.values[None, :] - E[:, None]
        inv, ok = batched_inverse(A, max_condition)
        if not ok.all():
            rejected += 1
            if rejected > 0.01 * n_realizations:
                raise NumericalGuardError(f"{rejected} realizations rejected in the energy quadrature")
            continue
        S = diagonalize(assemble_H(box, kernel, fld, g, omega))
        Q = correlator_matrices(S, spec)["Q"]
        integrand = np.abs(inv[:, idx[:, 0], idx[:, 1]]) ** s * factor[:, None]
        lhs_samples.append(Q[idx[:, 0], idx[:, 1]])
        trap_samples.append(w_trap @ integrand)
        simp_samples.append(w_simp @ integrand)
        edge_samples.append(integrand[0] + integrand[m])
        u_peak = np.maximum(u_peak, (integrand * jac_u[:, None]).max(axis=0))
    lhs_s = np.array(lhs_samples)
    trap_s = np.array(trap_samples)
    simp_s = np.array(simp_samples)
    lhs, _ = mean_and_se(lhs_s)
    rhs, _ = mean_and_se(trap_s)
    rhs_simp, _ = mean_and_se(simp_s)
    _, se = mean_and_se(lhs_s - trap_s)
    # Near Omega the integrand grows like |E-Omega|^(eps-1), so the excised
    # window carries about f(eps_res) * eps_res / eps on each side.
    edge, _ = mean_and_se(np.array(edge_samples))
    excised = edge * eps_res / spec.epsilon
    rows = []
    for k, (y, x) in enumerate(pairs):
        quad_err = float(abs(rhs[k] - rhs_simp[k]) + excised[k])
        rows.append({
            "y": tuple(int(c) for c in y), "x": tuple(int(c) for c in x),
            "lhs": float(lhs[k]), "rhs": float(rhs[k]), "se": float(se[k]),
            "quad_err": quad_err, "margin": float(n_se * se[k] + quad_err),
            "integrand_max": float(u_peak[k]),
            "passed": bool(lhs[k] <= rhs[k] + n_se * se[k] + quad_err),
            "n": int(lhs_s.shape[0]), "rejected": rejected,
        })
    return rows


# -- dynamics --------------------------------------------------------------------------------

@dataclass(frozen=True)
class DynamicsProbe:
    interval: tuple[float, float]
    x0: tuple[int, ...]
    times: np.ndarray = field(repr=False)
    per_site: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(np.sum(self.per_site))


def evolve(S: SpectralData, x0: Sequence[int], t: float) -> np.ndarray:
    """``exp(-itH) pi_x0^dagger`` as a (2n, 2) complex array."""
    n = S.n_sites
    i0 = S.hamiltonian.box.index_of(x0)
    V = S.eigenvectors
    C = V[[i0, n + i0]].T
    return (V * np.exp(-1j * S.eigenvalues * t)) @ C


def default_time_grid(S: SpectralData, t_max: float = 1e3, dt_factor: float = 0.1) -> np.ndarray:
    scale = max(float(np.abs(S.eigenvalues).max()), 1e-12)
    dt = dt_factor / scale
    return np.arange(int(np.floor(t_max / dt)) + 1) * dt


def dyn_loc_sum(S: SpectralData, interval: tuple[float, float], x0: Sequence[int],
                time_grid: np.ndarray, chunk: int = 512) -> DynamicsProbe:
    """Per-site ``max_t ||pi_y P(I) exp(-itH) pi_x0^dagger||^2`` over a time grid.

    The grid maximum is a lower bound on the supremum over all times.
    """
    lo, hi = interval
    n = S.n_sites
    i0 = S.hamiltonian.box.index_of(x0)
    keep = (S.eigenvalues > lo) & (S.eigenvalues < hi)
    V = S.eigenvectors[:, keep]
    E = S.eigenvalues[keep]
    best = np.zeros(n)
    times = np.asarray(time_grid, dtype=float)
    if E.size:
        C = V[[i0, n + i0]].T.astype(complex)
        Vc = V.astype(complex)
        for start in range(0, times.size, chunk):
            t = times[start:start + chunk]
            ph = np.exp(-1j * np.outer(t, E))
            amps = np.ascontiguousarray(Vc @ (ph[:, :, None] * C[None, :, :]))
            _kernels.sup_block_norm_sq(amps, best)
    return DynamicsProbe((float(lo), float(hi)), tuple(int(c) for c in x0), times, best)


def _outside_mask(S: SpectralData, L_inner: int) -> np.ndarray:
    box = S.hamiltonian.box
    if not 0 <= L_inner < box.L:
        raise ValueError(f"inner box L={L_inner} must lie strictly inside L={box.L}")
    out = np.abs(box.sites).max(axis=1) > L_inner
    return np.concatenate([out, out])


def _rage_parts(S: SpectralData, K_set: tuple[float, float], psi: np.ndarray, L_inner: int):
    psi = np.asarray(psi)
    if psi.shape != (S.eigenvectors.shape[0],):
        raise ValueError("psi must be a vector on the full two-component space")
    mask = _outside_mask(S, L_inner)
    lo, hi = K_set
    comps, energies = [], []
    for c in range(S.n_clusters):
        if not lo <= S.energies[c] <= hi:
            continue
        v = S.eigenvectors[:, S.cluster_members(c)]
        comps.append((v @ (v.T @ psi))[mask])
        energies.append(S.energies[c])
    if not comps:
        return np.zeros((int(mask.sum()), 0)), np.zeros(0)
    return np.stack(comps, axis=1), np.array(energies)


def rage_time_average(S: SpectralData, K_set: tuple[float, float], psi: np.ndarray,
                      L_inner: int, T_horizon: float) -> float:
    """``(1/T) int_0^T ||chi_outside exp(-itH) P(K) psi||^2 dt`` in closed form."""
    M, E = _rage_parts(S, K_set, psi, L_inner)
    if E.size == 0:
        return 0.0
    gram = M.conj().T @ M
    delta = E[:, None] - E[None, :]
    x = delta * T_horizon
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(np.abs(x) < 1e-12, 1.0 + 0j, (np.exp(1j * x) - 1.0) / (1j * x))
    return float(np.real(np.sum(gram * avg)))


def rage_limit(S: SpectralData, K_set: tuple[float, float], psi: np.ndarray, L_inner: int) -> float:
    """Infinite-time limit: sum over clusters of the escaped weight."""
    M, E = _rage_parts(S, K_set, psi, L_inner)
    return float(np.sum(np.abs(M) ** 2))
