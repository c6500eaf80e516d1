"""Non-interacting n-excitation Hamiltonians as tensor sums of the one-excitation H."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import BudgetError
from .hamiltonian import ExcitonHamiltonian

MAX_DIMENSION = 4096


@dataclass(frozen=True)
class TensorSumHamiltonian:
    n: int
    base: ExcitonHamiltonian = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def tensor_dimension(H: ExcitonHamiltonian, n: int) -> int:
    return (2 * H.n_sites) ** n


def _tensor_sum(h: np.ndarray, n: int) -> np.ndarray:
    m = h.shape[0]
    out = np.zeros((m ** n, m ** n))
    for k in range(n):
        out += np.kron(np.kron(np.eye(m ** k), h), np.eye(m ** (n - k - 1)))
    return out


def build_tensor_sum(H: ExcitonHamiltonian, n: int,
                     max_dimension: int = MAX_DIMENSION) -> TensorSumHamiltonian:
    """``sum_k I x ... x H x ... x I`` with H in slot k, as a dense matrix.

    The full tensor product is kept; nothing is projected onto the symmetric
    subspace.
    """
    if n < 2:
        raise ValueError(f"excitation count must be >= 2, got {n}")
    dim = tensor_dimension(H, n)
    if dim > max_dimension:
        raise BudgetError(f"tensor dimension {dim} exceeds budget {max_dimension}")
    out = _tensor_sum(H.matrix, n)
    out.setflags(write=False)
    return TensorSumHamiltonian(n, H, out)


def minkowski_sums(evals: np.ndarray, n: int) -> np.ndarray:
    """Sorted multiset ``{l_i1 + ... + l_in}`` over all index tuples."""
    total = np.zeros(1)
    for _ in range(n):
        total = (total[:, None] + evals[None, :]).ravel()
    return np.sort(total)


def minkowski_deviation(h: np.ndarray, n: int, max_dimension: int = MAX_DIMENSION) -> float:
    """Minkowski gap for a bare symmetric one-excitation matrix ``h``."""
    m = h.shape[0]
    if n < 2:
        raise ValueError(f"excitation count must be >= 2, got {n}")
    if m ** n > max_dimension:
        raise BudgetError(f"tensor dimension {m ** n} exceeds budget {max_dimension}")
    ev_n = np.linalg.eigvalsh(_tensor_sum(h, n))
    return float(np.abs(ev_n - minkowski_sums(np.linalg.eigvalsh(h), n)).max())


def minkowski_check(H: ExcitonHamiltonian, n: int,
                    max_dimension: int = MAX_DIMENSION) -> float:
    """Max gap between the sorted spectrum of ``H_n`` and the n-fold sums of ``spec(H)``."""
    return minkowski_deviation(H.matrix, n, max_dimension)


def minkowski_scale(H: ExcitonHamiltonian, n: int) -> float:
    return n * max(1.0, float(np.abs(np.linalg.eigvalsh(H.matrix)).max()))


# Component order (first particle, second particle); 0 = photon, 1 = atom.
TWO_EXCITATION_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


def two_excitation_blocks(Hn: TensorSumHamiltonian) -> np.ndarray:
    """Regroup ``H_2`` into a 4x4 grid of |box|^2 blocks in component order
    photon-photon, atom-photon, photon-atom, atom-atom."""
    if Hn.n != 2:
        raise ValueError("block view is defined for two excitations")
    N = Hn.base.n_sites
    m = 2 * N
    perm = []
    for c1, c2 in TWO_EXCITATION_ORDER:
        for a, b in product(range(N), range(N)):
            perm.append((c1 * N + a) * m + (c2 * N + b))
    perm = np.array(perm)
    return Hn.matrix[np.ix_(perm, perm)]


def two_excitation_reference(H: ExcitonHamiltonian) -> np.ndarray:
    """The two-excitation matrix written block by block.

    Diagonal blocks are ``T_x + T_y``, ``T_y + Omega``, ``T_x + Omega`` and
    ``2 Omega``; the first particle's coupling links blocks 1-2 and 3-4, the
    second particle's links 1-3 and 2-4.
    """
    N = H.n_sites
    T, I = H.T, np.eye(N)
    c = np.diag(H.coupling)
    Tx = np.kron(T, I)
    Ty = np.kron(I, T)
    Cx = np.kron(c, I)
    Cy = np.kron(I, c)
    Om = H.omega * np.eye(N * N)
    Z = np.zeros((N * N, N * N))
    return np.block([
        [Tx + Ty, Cx, Cy, Z],
        [Cx, Ty + Om, Z, Cy],
        [Cy, Z, Tx + Om, Cx],
        [Z, Cy, Cx, 2.0 * Om],
    ])


def eigenvalue_table(Hn: TensorSumHamiltonian) -> np.ndarray:
    return np.linalg.eigvalsh(Hn.matrix)
