"""Select the compiled kernels when available, else the numpy fallback.

Set ``NSTSIM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("NSTSIM_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

BACKEND = "compiled" if kernels is not _kernels_py else "python"
