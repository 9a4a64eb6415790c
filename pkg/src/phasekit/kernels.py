"""Kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``PHASEKIT_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("PHASEKIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

IMPLEMENTATION = _impl.IMPLEMENTATION
truncated_lsq = _impl.truncated_lsq
linear_local = _impl.linear_local
riccati_local = _impl.riccati_local
