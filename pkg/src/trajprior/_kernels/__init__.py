"""Hot-kernel backend selection.

Prefers the compiled Cython extension; falls back to the pure-Python
reference implementation. Set TRAJPRIOR_PURE=1 to force the fallback.
"""
from __future__ import annotations

import os

if os.environ.get("TRAJPRIOR_PURE", "0") not in ("", "0"):
    from . import _ref as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as _impl

BACKEND: str = _impl.BACKEND
frechet_dp = _impl.frechet_dp
traverse_cells = _impl.traverse_cells

__all__ = ["BACKEND", "frechet_dp", "traverse_cells"]
