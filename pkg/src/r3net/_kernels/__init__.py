"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension is selected at import when available; set
``R3NET_PURE_PYTHON=1`` to force the numpy implementation. Both expose
the same functions and must produce identical results.
"""

import os

from . import purepy

if os.environ.get("R3NET_PURE_PYTHON"):
    _impl = purepy
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = purepy

BACKEND = _impl.BACKEND

choose_entering_dantzig = _impl.choose_entering_dantzig
choose_entering_bland = _impl.choose_entering_bland
ratio_test = _impl.ratio_test
eta_update = _impl.eta_update
redistribute_failed = _impl.redistribute_failed

# status codes shared by both backends
BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FIXED = 3

# ratio_test outcome codes
RT_PIVOT = 0
RT_FLIP = 1
RT_UNBOUNDED = 2
