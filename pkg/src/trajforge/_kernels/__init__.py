"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is a drop-in
fallback.  Set ``TRAJFORGE_PURE_PYTHON=1`` to force the fallback (used by
the parity tests and the benchmark).
"""

import os

from . import _pure

if os.environ.get("TRAJFORGE_PURE_PYTHON"):
    _impl = _pure
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
lift_rk4 = _impl.lift_rk4
parageodesic_rk4 = _impl.parageodesic_rk4
roll_rk4 = _impl.roll_rk4


def backends():
    """Return the available kernel modules keyed by name."""
    out = {"pure": _pure}
    try:
        from . import _native
        out["native"] = _native
    except ImportError:
        pass
    return out
