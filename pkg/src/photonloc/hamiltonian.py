"""Finite-volume one-excitation Hamiltonian and its reduced operator.

Basis order is all photon amplitudes (one per site, lexicographic) followed by
all atomic amplitudes, so ``H = [[T, g sqrt(rho)], [g sqrt(rho), Omega I]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .disorder import DisorderField
from .errors import ResonanceError
from .hopping import HoppingKernel
from .lattice import LatticeBox


def resonance_window(g: float, rho0: float) -> float:
    """Half width of the excluded energy window around Omega."""
    return 1e-8 * max(1.0, g * g * rho0)


@dataclass(frozen=True)
class ExcitonHamiltonian:
    box: LatticeBox
    kernel: HoppingKernel
    field: DisorderField
    g: float
    omega: float
    T: np.ndarray = field(repr=False, compare=False)
    matrix: np.ndarray = field(repr=False, compare=False)

    @property
    def n_sites(self) -> int:
        return self.box.n_sites

    @property
    def rho(self) -> np.ndarray:
        return self.field.values

    @property
    def g2rho0(self) -> float:
        return self.g * self.g * self.field.rho0

    @property
    def eps_res(self) -> float:
        return resonance_window(self.g, self.field.rho0)

    @property
    def coupling(self) -> np.ndarray:
        """Diagonal entries ``g sqrt(rho(x))`` of the off-diagonal block."""
        return self.g * np.sqrt(self.field.values)

    def free_part(self) -> np.ndarray:
        n = self.n_sites
        h0 = np.zeros_like(self.matrix)
        h0[:n, :n] = self.T
        h0[n:, n:] = self.omega * np.eye(n)
        return h0

    def random_part(self) -> np.ndarray:
        return self.matrix - self.free_part()

    def envelope(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """The two intervals that must contain the spectrum."""
        c = self.g * np.sqrt(2.0 * self.field.rho0)
        t = self.kernel.norm_bound
        return (-t - c, t + c), (self.omega - c, self.omega + c)


def assemble_H(box: LatticeBox, kernel: HoppingKernel, fld: DisorderField,
               g: float, omega: float) -> ExcitonHamiltonian:
    if g < 0.0:
        raise ValueError(f"coupling g must be non-negative, got {g}")
    if omega <= 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    if fld.box != box:
        raise ValueError("disorder field lives on a different box")
    T = kernel.matrix_on(box)
    n = box.n_sites
    c = g * np.sqrt(fld.values)
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = T
    idx = np.arange(n)
    H[idx, n + idx] = c
    H[n + idx, idx] = c
    H[n + idx, n + idx] = omega
    T.setflags(write=False)
    H.setflags(write=False)
    return ExcitonHamiltonian(box, kernel, fld, float(g), float(omega), T, H)


def _check_resonance(H: ExcitonHamiltonian, E: float) -> None:
    if abs(E - H.omega) < H.eps_res:
        raise ResonanceError(
            f"energy {E!r} within {H.eps_res:.1e} of Omega={H.omega}; reduced operator diverges"
        )


def energy_shift(H: ExcitonHamiltonian, E: float) -> float:
    """``g^2 / (E - Omega)``, the coefficient of rho in the reduced operator."""
    _check_resonance(H, E)
    return H.g * H.g / (E - H.omega)


def assemble_K(H: ExcitonHamiltonian, E: float) -> np.ndarray:
    """Reduced operator ``T + g^2/(E - Omega) rho`` on the photon sites."""
    K = H.T + np.diag(energy_shift(H, E) * H.rho)
    return K


def assemble_K_hat(H: ExcitonHamiltonian, E: float, x: Sequence[int], rho_hat: float) -> np.ndarray:
    """Reduced operator with ``rho(x)`` replaced by ``rho_hat``."""
    rho0 = H.field.rho0
    if not 0.0 <= rho_hat <= 2.0 * rho0:
        raise ValueError(f"replacement density {rho_hat} outside [0, {2.0 * rho0}]")
    K = assemble_K(H, E)
    i = H.box.index_of(x)
    K[i, i] += H.g * H.g * (rho_hat - H.rho[i]) / (E - H.omega)
    return K
