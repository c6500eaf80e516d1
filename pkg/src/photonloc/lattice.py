"""Finite boxes of Z^d centred at the origin.

Sites are stored as rows of an integer array in lexicographic order, which
fixes the layout of every matrix built downstream.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BoxSizeError

MAX_SITES = 1_000_000

Site = tuple[int, ...]


@dataclass(frozen=True)
class LatticeBox:
    """The box ``[-L, L]^d`` of Z^d.

    Attributes
    ----------
    d : int
        Spatial dimension.
    L : int
        Half side; the box has ``(2L+1)**d`` sites.
    sites : ndarray of int, shape (n_sites, d)
        Site coordinates in lexicographic order.
    """

    d: int
    L: int
    sites: np.ndarray = field(repr=False, compare=False)
    _index: dict = field(repr=False, compare=False)

    @property
    def n_sites(self) -> int:
        return self.sites.shape[0]

    def __len__(self) -> int:
        return self.n_sites

    def index_of(self, site: Sequence[int]) -> int:
        key = tuple(int(c) for c in site)
        if len(key) != self.d:
            raise ValueError(f"site {key} has dimension {len(key)}, box has d={self.d}")
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"site {key} is outside the box L={self.L}") from None

    def site_at(self, i: int) -> Site:
        return tuple(int(c) for c in self.sites[i])

    def contains(self, site: Sequence[int]) -> bool:
        return len(site) == self.d and all(abs(int(c)) <= self.L for c in site)

    @property
    def origin(self) -> int:
        """Index of the site ``(0, ..., 0)``."""
        return self.n_sites // 2

    def l1_from(self, site: Sequence[int]) -> np.ndarray:
        """l1 distance of every site of the box to ``site``."""
        return np.abs(self.sites - np.asarray(site, dtype=np.int64)).sum(axis=1)

    def displacements(self) -> np.ndarray:
        """Array ``D[i, j] = sites[j] - sites[i]`` of shape (n, n, d)."""
        return self.sites[None, :, :] - self.sites[:, None, :]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeBox):
            return NotImplemented
        return self.d == other.d and self.L == other.L

    def __hash__(self) -> int:
        return hash((self.d, self.L))


def enumerate_box(d: int, L: int, max_sites: int = MAX_SITES) -> LatticeBox:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if L < 0:
        raise ValueError(f"half side must be >= 0, got {L}")
    n = (2 * L + 1) ** d
    if n > max_sites:
        raise BoxSizeError(f"box d={d}, L={L} has {n} sites > limit {max_sites}")
    axis = range(-L, L + 1)
    sites = np.array(list(itertools.product(axis, repeat=d)), dtype=np.int64).reshape(n, d)
    index = {tuple(int(c) for c in s): i for i, s in enumerate(sites)}
    sites.setflags(write=False)
    return LatticeBox(d=d, L=L, sites=sites, _index=index)


def l1_distance(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return sum(abs(int(x) - int(y)) for x, y in zip(a, b))
