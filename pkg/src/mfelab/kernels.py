"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``MFELAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("MFELAB_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

eval_sh = _impl.eval_sh
label_sphere_grid = _impl.label_sphere_grid
