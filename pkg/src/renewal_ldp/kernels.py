"""Backend dispatch for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``RENEWAL_LDP_PURE_PYTHON`` is set to a true value,
the pure-Python module is used. ``BACKEND`` names the active choice.
"""

import os

from . import _kernels_py

_FORCE_PY = os.environ.get("RENEWAL_LDP_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes", "on"}

if _FORCE_PY:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

volterra_forward = _impl.volterra_forward
gauss_seidel_sweep = _impl.gauss_seidel_sweep
scan_exceed_batch = _impl.scan_exceed_batch


def compiled_available():
    """True when the compiled extension can be imported."""
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
