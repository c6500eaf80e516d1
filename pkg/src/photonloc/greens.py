"""Finite-volume Green's functions of the reduced operator.

Two routes are provided: a linear solve against ``K(z) - z`` and the photon
block of the full resolvent of ``H``. Both work at real energies only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SingularSolveError
from .hamiltonian import ExcitonHamiltonian, assemble_K, assemble_K_hat, energy_shift

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class GreensSample:
    z: float
    x0: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    condition: float = float("nan")

    def at(self, H: ExcitonHamiltonian, x: Sequence[int]) -> float:
        return float(self.values[H.box.index_of(x)])


def _guarded_solve(A: np.ndarray, b: np.ndarray, max_condition: float) -> tuple[np.ndarray, float]:
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularSolveError(f"near-singular solve, condition {cond:.3e}", cond)
    return np.linalg.solve(A, b), cond


def reduced_shifted(H: ExcitonHamiltonian, z: float) -> np.ndarray:
    """``K(z) - z``."""
    A = assemble_K(H, z)
    A[np.diag_indices_from(A)] -= z
    return A


def greens_via_K(H: ExcitonHamiltonian, z: float, x0: Sequence[int],
                 max_condition: float = MAX_CONDITION) -> GreensSample:
    i0 = H.box.index_of(x0)
    rhs = np.zeros(H.n_sites)
    rhs[i0] = 1.0
    g, cond = _guarded_solve(reduced_shifted(H, z), rhs, max_condition)
    return GreensSample(float(z), tuple(int(c) for c in x0), g, cond)


def greens_via_H(H: ExcitonHamiltonian, z: float, x0: Sequence[int],
                 max_condition: float = MAX_CONDITION) -> GreensSample:
    """Photon entries of ``(H - z)^{-1} e_{1,x0}``."""
    n = H.n_sites
    i0 = H.box.index_of(x0)
    rhs = np.zeros(2 * n)
    rhs[i0] = 1.0
    A = H.matrix - z * np.eye(2 * n)
    sol, cond = _guarded_solve(A, rhs, max_condition)
    return GreensSample(float(z), tuple(int(c) for c in x0), sol[:n].copy(), cond)


def greens_matrix(H: ExcitonHamiltonian, z: float,
                  max_condition: float = MAX_CONDITION) -> np.ndarray:
    A = reduced_shifted(H, z)
    G, _ = _guarded_solve(A, np.eye(H.n_sites), max_condition)
    return G


def self_energy(H: ExcitonHamiltonian, z: float, x: Sequence[int],
                max_condition: float = MAX_CONDITION) -> float:
    """gamma(x; z) = sum_{y,y' != x} T(x,y) T(y',x) G_{box minus x}(y, y'; z).

    Built from the box with ``x`` removed, so it never sees ``rho(x)``.
    """
    i = H.box.index_of(x)
    keep = np.arange(H.n_sites) != i
    t = H.T[keep, i]
    if t.size == 0:
        return 0.0
    A = reduced_shifted(H, z)[np.ix_(keep, keep)]
    sol, _ = _guarded_solve(A, t, max_condition)
    return float(H.T[i, keep] @ sol)


def schur_diagonal(H: ExcitonHamiltonian, z: float, x: Sequence[int],
                   max_condition: float = MAX_CONDITION) -> float:
    """Diagonal Green's function from the Schur complement of site ``x``.

    The denominator keeps the on-site hopping ``T(x,x)`` explicitly:
    ``g^2 rho(x)/(z-Omega) + T(x,x) - z - gamma(x; z)``.
    """
    i = H.box.index_of(x)
    gamma = self_energy(H, z, x, max_condition)
    denom = energy_shift(H, z) * H.rho[i] + H.T[i, i] - z - gamma
    if denom == 0.0:
        raise SingularSolveError("Schur complement vanished", np.inf)
    return 1.0 / denom


def green_hat(H: ExcitonHamiltonian, E: float, x: Sequence[int], rho_hat: float,
              max_condition: float = MAX_CONDITION) -> np.ndarray:
    """Column ``G_hat(., x; E)`` of the resolvent of the site-modified reduced operator."""
    A = assemble_K_hat(H, E, x, rho_hat)
    A[np.diag_indices_from(A)] -= E
    rhs = np.zeros(H.n_sites)
    rhs[H.box.index_of(x)] = 1.0
    col, _ = _guarded_solve(A, rhs, max_condition)
    return col


def gamma_x(H: ExcitonHamiltonian, E: float, x: Sequence[int], rho_hat: float,
            max_condition: float = MAX_CONDITION) -> float:
    """``-1 / G_hat(x, x; E)``."""
    col = green_hat(H, E, x, rho_hat, max_condition)
    return -1.0 / float(col[H.box.index_of(x)])


def batched_inverse(A: np.ndarray, max_condition: float = MAX_CONDITION
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Invert a stack of matrices; returns (inverses, ok-mask by 1-norm condition)."""
    with np.errstate(all="ignore"):
        try:
            inv = np.linalg.inv(A)
            singular = np.zeros(A.shape[0], dtype=bool)
        except np.linalg.LinAlgError:
            inv = np.empty_like(A)
            singular = np.zeros(A.shape[0], dtype=bool)
            for k in range(A.shape[0]):
                try:
                    inv[k] = np.linalg.inv(A[k])
                except np.linalg.LinAlgError:
                    inv[k] = np.nan
                    singular[k] = True
        cond = np.abs(A).sum(axis=-2).max(axis=-1) * np.abs(inv).sum(axis=-2).max(axis=-1)
    ok = ~singular & np.isfinite(cond) & (cond <= max_condition)
    return inv, ok
