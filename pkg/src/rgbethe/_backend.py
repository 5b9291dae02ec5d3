"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``RGBETHE_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pyfallback

BACKEND = "python"
_impl = _pyfallback

if os.environ.get("RGBETHE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

permanent = _impl.permanent
rg_residual_jacobian = _impl.rg_residual_jacobian

__all__ = ["BACKEND", "permanent", "rg_residual_jacobian"]
