"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``FRONTLAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("FRONTLAB_PURE_PYTHON") == "1":
    from . import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as kernels

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
