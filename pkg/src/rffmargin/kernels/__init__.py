"""Hot sampling kernels with a compiled core and a NumPy fallback.

The compiled extension is preferred when importable; set the environment
variable ``RFFMARGIN_BACKEND=numpy`` to force the fallback (used by the
benchmark and the backend-parity tests).
"""

import os

from . import numpy_backend

_FORCED = os.environ.get("RFFMARGIN_BACKEND", "").strip().lower()

if _FORCED == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"

h_potential_grad = _impl.h_potential_grad
omega_potential_grad = _impl.omega_potential_grad
h_block_update = _impl.h_block_update
omega_block_update = _impl.omega_block_update


def available_backends():
    """Mapping of importable backend name -> module."""
    found = {"numpy": numpy_backend}
    try:
        from . import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found
