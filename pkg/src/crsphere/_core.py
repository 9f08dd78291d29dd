"""Kernel implementation selector.

Imports the compiled extension when available, otherwise the numpy fallback.
Set ``CRSPHERE_PURE_PYTHON=1`` to force the fallback (used by the kernel
agreement tests and the benchmark).
"""

import os

if os.environ.get("CRSPHERE_PURE_PYTHON"):
    from . import _kernels_np as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_np as _impl

eval_poly = _impl.eval_poly
IMPLEMENTATION = _impl.IMPLEMENTATION
