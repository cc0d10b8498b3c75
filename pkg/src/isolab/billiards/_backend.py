"""Pick the compiled kernels when available; ISOLAB_PURE=1 forces the Python ones."""
import os

from . import _pykernels

if os.environ.get("ISOLAB_PURE", "") not in ("", "0"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
