"""Reproducible i.i.d. uniform density fields.

Each value is a pure function of ``(master_seed, realization, stream, site)``
so fields on nested boxes agree on their common sites and parallel workers
need no coordination.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .lattice import LatticeBox

FIELD_STREAM = 0
AUX_STREAM = 1


@dataclass(frozen=True)
class DisorderField:
    box: LatticeBox
    rho0: float
    master_seed: int
    realization: int
    values: np.ndarray = field(repr=False, compare=False)
    random: bool = True

    def __getitem__(self, site: Sequence[int]) -> float:
        return float(self.values[self.box.index_of(site)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DisorderField):
            return NotImplemented
        return (self.box == other.box and self.rho0 == other.rho0
                and np.array_equal(self.values, other.values))

    __hash__ = None  # type: ignore[assignment]


def keyed_uniform(box: LatticeBox, master_seed: int, realization: int,
                  stream: int = FIELD_STREAM) -> np.ndarray:
    return _kernels.keyed_uniform(int(master_seed), int(realization), int(stream), box.sites)


def sample_field(box: LatticeBox, rho0: float, master_seed: int, realization: int) -> DisorderField:
    if not rho0 > 0.0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    u = keyed_uniform(box, master_seed, realization, FIELD_STREAM)
    values = 2.0 * rho0 * u
    values.setflags(write=False)
    return DisorderField(box, float(rho0), int(master_seed), int(realization), values)


def sample_fields(box: LatticeBox, rho0: float, master_seed: int,
                  realizations: Sequence[int]) -> np.ndarray:
    """Stacked density values, shape (len(realizations), n_sites)."""
    return np.stack([sample_field(box, rho0, master_seed, r).values for r in realizations])


def constant_field(box: LatticeBox, rho0: float) -> DisorderField:
    """Non-random field ``rho == rho0``; averaging routines refuse it."""
    values = np.full(box.n_sites, float(rho0))
    values.setflags(write=False)
    return DisorderField(box, float(rho0), 0, 0, values, random=False)


def field_from_values(box: LatticeBox, rho0: float, values: Sequence[float]) -> DisorderField:
    values = np.array(values, dtype=float)
    if values.shape != (box.n_sites,):
        raise ValueError(f"expected {box.n_sites} values, got shape {values.shape}")
    if np.any(values < 0.0) or np.any(values > 2.0 * rho0):
        raise ValueError(f"density values must lie in [0, {2.0 * rho0}]")
    values.setflags(write=False)
    return DisorderField(box, float(rho0), 0, 0, values, random=False)


def resample_site(fld: DisorderField, x: Sequence[int], new_value: float) -> DisorderField:
    if not 0.0 <= new_value <= 2.0 * fld.rho0:
        raise ValueError(f"new density {new_value} outside [0, {2.0 * fld.rho0}]")
    values = fld.values.copy()
    values[fld.box.index_of(x)] = new_value
    values.setflags(write=False)
    return replace(fld, values=values)


def auxiliary_density(fld: DisorderField, x: Sequence[int]) -> float:
    """Independent uniform draw on [0, 2 rho0] used as the replacement density at ``x``."""
    site = np.asarray([x], dtype=np.int64)
    u = _kernels.keyed_uniform(fld.master_seed, fld.realization, AUX_STREAM, site)
    return float(2.0 * fld.rho0 * u[0])
