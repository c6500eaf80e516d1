"""Finite-volume numerics for a photon field coupled to a random medium of two-level atoms.

The one-excitation Hamiltonian on a box of Z^d couples a photon amplitude
(hopping operator ``T``) to an atomic amplitude at each site through
``g sqrt(rho(x))`` with i.i.d. densities uniform on ``[0, 2 rho0]``.
"""
from ._kernels import BACKEND
from .config import ExperimentConfig, load_config
from .correlators import (WeightSpec, correlator_matrices, dyn_loc_sum, rage_limit,
                          rage_time_average, weight, weight_g, weight_spec)
from .disorder import DisorderField, constant_field, sample_field
from .errors import (BudgetError, ConfigError, EigensolverError, NumericalGuardError,
                     PhotonlocError, ResonanceError, SingularSolveError)
from .greens import greens_via_H, greens_via_K, schur_diagonal
from .hamiltonian import ExcitonHamiltonian, assemble_H, assemble_K, assemble_K_hat
from .hopping import (HoppingKernel, half_laplacian_kernel, lambda_T, laplacian_kernel, r_zs,
                      summability)
from .lattice import LatticeBox, enumerate_box, l1_distance
from .moments import MomentEstimate, estimate_moments
from .multiphoton import build_tensor_sum, minkowski_check
from .spectral import SpectralData, diagonalize

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetError", "ConfigError", "DisorderField", "EigensolverError",
    "ExcitonHamiltonian", "ExperimentConfig", "HoppingKernel", "LatticeBox", "MomentEstimate",
    "NumericalGuardError", "PhotonlocError", "ResonanceError", "SingularSolveError",
    "SpectralData", "WeightSpec", "assemble_H", "assemble_K", "assemble_K_hat",
    "build_tensor_sum", "constant_field", "correlator_matrices", "diagonalize", "dyn_loc_sum",
    "enumerate_box", "estimate_moments", "greens_via_H", "greens_via_K", "half_laplacian_kernel",
    "l1_distance", "lambda_T", "laplacian_kernel", "load_config", "minkowski_check", "r_zs",
    "rage_limit", "rage_time_average", "sample_field", "schur_diagonal", "summability",
    "weight", "weight_g", "weight_spec",
]
