"""Hot inner loops, compiled when available.

The Cython extension ``_ckernels`` is used if it imports; otherwise the NumPy
versions in ``_fallback`` are used. ``PHOTONLOC_KERNELS=python`` forces the
fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("PHOTONLOC_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

keyed_uniform = _impl.keyed_uniform
weighted_block_norms = _impl.weighted_block_norms
sup_block_norm_sq = _impl.sup_block_norm_sq

__all__ = ["BACKEND", "keyed_uniform", "weighted_block_norms", "sup_block_norm_sq"]
