"""Pick the compiled kernels when available, else the numpy fallback.

Set ``MIXUNION_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("MIXUNION_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _fallback

BACKEND = kernels.BACKEND


def available_backends():
    found = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
