"""Eigendecomposition of the boxed Hamiltonian and projector blocks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EigensolverError
from .hamiltonian import ExcitonHamiltonian

CLUSTER_RTOL = 1e-9


@dataclass(frozen=True)
class SpectralData:
    """Eigenpairs of ``H`` grouped into degeneracy clusters.

    ``bounds[c]:bounds[c+1]`` are the eigenvector columns of cluster ``c``;
    ``energies[c]`` is the mean eigenvalue of the cluster.
    """

    hamiltonian: ExcitonHamiltonian = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    bounds: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return self.hamiltonian.n_sites

    @property
    def n_clusters(self) -> int:
        return self.energies.shape[0]

    @property
    def photon(self) -> np.ndarray:
        return self.eigenvectors[: self.n_sites]

    @property
    def atom(self) -> np.ndarray:
        return self.eigenvectors[self.n_sites:]

    def cluster_members(self, c: int) -> slice:
        return slice(int(self.bounds[c]), int(self.bounds[c + 1]))

    def cluster_sizes(self) -> np.ndarray:
        return np.diff(self.bounds)

    def projector(self, c: int) -> np.ndarray:
        v = self.eigenvectors[:, self.cluster_members(c)]
        return v @ v.T

    def phi(self) -> np.ndarray:
        """Photon overlaps ``phi[c, y, x] = <e_{1,y}, P_c e_{1,x}>``."""
        n = self.n_sites
        out = np.empty((self.n_clusters, n, n))
        for c in range(self.n_clusters):
            p = self.photon[:, self.cluster_members(c)]
            out[c] = p @ p.T
        return out

    def phi_diag(self) -> np.ndarray:
        """``phi[c, x, x]`` for all clusters and sites, shape (n_clusters, n)."""
        sq = self.photon ** 2
        return np.add.reduceat(sq, self.bounds[:-1], axis=1).T


@dataclass(frozen=True)
class ProjectorBlock:
    E: float
    block: np.ndarray
    phi: float


def cluster_eigenvalues(evals: np.ndarray, rtol: float = CLUSTER_RTOL) -> np.ndarray:
    diameter = float(evals[-1] - evals[0]) if evals.size else 0.0
    tol = rtol * (diameter if diameter > 0.0 else 1.0)
    breaks = np.flatnonzero(np.diff(evals) > tol) + 1
    return np.concatenate(([0], breaks, [evals.size])).astype(np.int64)


def diagonalize(H: ExcitonHamiltonian) -> SpectralData:
    try:
        evals, evecs = np.linalg.eigh(H.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigh failed: {exc}") from exc
    if not np.all(np.isfinite(evals)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")
    bounds = cluster_eigenvalues(evals)
    energies = np.add.reduceat(evals, bounds[:-1]) / np.diff(bounds)
    for a in (evals, evecs, bounds, energies):
        a.setflags(write=False)
    return SpectralData(H, evals, evecs, bounds, energies)


def residuals(S: SpectralData) -> tuple[float, float]:
    """Max eigenpair residual relative to ||H|| and max deviation of V^T V from I."""
    H = S.hamiltonian.matrix
    V = S.eigenvectors
    scale = max(float(np.abs(S.eigenvalues).max()), 1e-300)
    res = np.linalg.norm(H @ V - V * S.eigenvalues, axis=0).max() / scale
    orth = np.abs(V.T @ V - np.eye(V.shape[1])).max()
    return float(res), float(orth)


def cluster_of(S: SpectralData, E: float) -> int:
    c = int(np.argmin(np.abs(S.energies - E)))
    return c


def projector_block(S: SpectralData, cluster: int, y: Sequence[int], x: Sequence[int]) -> ProjectorBlock:
    if not 0 <= cluster < S.n_clusters:
        raise IndexError(f"cluster {cluster} out of range")
    box = S.hamiltonian.box
    n = S.n_sites
    iy, ix = box.index_of(y), box.index_of(x)
    v = S.eigenvectors[:, S.cluster_members(cluster)]
    rows = v[[iy, n + iy]]
    cols = v[[ix, n + ix]]
    block = rows @ cols.T
    return ProjectorBlock(float(S.energies[cluster]), block, float(block[0, 0]))


def block_spectral_norm(block: np.ndarray) -> float:
    return float(np.linalg.norm(block, 2))


def predicted_block(S: SpectralData, cluster: int, y: Sequence[int], x: Sequence[int]) -> np.ndarray:
    """The 2x2 block reconstructed from its photon entry alone.

    Rows and columns are scaled by ``g sqrt(rho)/(E - Omega)`` at y and x.
    """
    H = S.hamiltonian
    box = H.box
    pb = projector_block(S, cluster, y, x)
    dE = pb.E - H.omega
    ay = H.coupling[box.index_of(y)] / dE
    ax = H.coupling[box.index_of(x)] / dE
    return np.array([[1.0, ax], [ay, ay * ax]]) * pb.phi


def block_structure_residual(S: SpectralData) -> float:
    """Max entrywise gap between projector blocks and their photon-entry reconstruction.

    All site pairs and all clusters at least ``eps_res`` away from Omega are
    included.
    """
    H = S.hamiltonian
    n = S.n_sites
    worst = 0.0
    for c in range(S.n_clusters):
        dE = S.energies[c] - H.omega
        if abs(dE) < H.eps_res:
            continue
        v = S.eigenvectors[:, S.cluster_members(c)]
        p1, p2 = v[:n], v[n:]
        phi = p1 @ p1.T
        a = H.coupling / dE
        worst = max(worst,
                    float(np.abs(p2 @ p1.T - a[:, None] * phi).max()),
                    float(np.abs(p1 @ p2.T - phi * a[None, :]).max()),
                    float(np.abs(p2 @ p2.T - np.outer(a, a) * phi).max()))
    return worst


def normalization_identity_check(S: SpectralData, cluster: int, x: Sequence[int]) -> float:
    """|sum_y (1 + g^2 rho(y)/(E-Omega)^2) phi_E(y,x)^2 - phi_E(x,x)|."""
    H = S.hamiltonian
    E = float(S.energies[cluster])
    if abs(E - H.omega) < H.eps_res:
        raise ValueError("cluster energy inside the resonance window")
    ix = H.box.index_of(x)
    p = S.photon[:, S.cluster_members(cluster)]
    col = p @ p[ix]
    weight = 1.0 + H.g * H.g * H.rho / (E - H.omega) ** 2
    return float(abs(np.sum(weight * col ** 2) - col[ix]))


def spectrum_envelope_check(S: SpectralData, H: ExcitonHamiltonian | None = None,
                            atol: float = 1e-10) -> bool:
    H = S.hamiltonian if H is None else H
    (a0, a1), (b0, b1) = H.envelope()
    scale = max(1.0, abs(a0), abs(a1), abs(b0), abs(b1))
    tol = atol * scale
    ev = S.eigenvalues
    inside = ((ev >= a0 - tol) & (ev <= a1 + tol)) | ((ev >= b0 - tol) & (ev <= b1 + tol))
    return bool(np.all(inside))


def completeness_residual(S: SpectralData) -> float:
    total = sum(S.projector(c) for c in range(S.n_clusters))
    return float(np.abs(total - np.eye(total.shape[0])).max())
