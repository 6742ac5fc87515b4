"""Select the compiled kernels when built, the numpy fallback otherwise.

Set ``DISTLAYER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from distlayer import _fallback

if os.environ.get("DISTLAYER_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from distlayer import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
assign_nearest = _impl.assign_nearest


def backends():
    """All importable kernel modules by name, for tests and benchmarks."""
    found = {"python": _fallback}
    try:
        from distlayer import _core
        found["cython"] = _core
    except ImportError:
        pass
    return found
