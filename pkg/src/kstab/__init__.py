"""Exact and numerical checks around K-stability, parabolic stabilization and Bergman kernels."""
import os as _os

# KSTAB_THREADS caps BLAS/OpenMP pools; it must be set before numpy is first imported
_threads = _os.environ.get("KSTAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
