"""Hot kernels, compiled when available.

The Cython extension ``_core`` is used if it was built; otherwise the numpy
fallback is imported.  Set ``PERSPECTIVE_RSA_PURE_PYTHON=1`` to force the
fallback (the benchmark and the backend-agreement tests do this explicitly via
:func:`load_backend`).
"""
from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _fallback


def load_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module ``"cython"``, ``"python"`` or the default choice."""
    if name == "python":
        return _fallback
    if name == "cython":
        return importlib.import_module(f"{__name__}._core")
    if os.environ.get("PERSPECTIVE_RSA_PURE_PYTHON", "") not in ("", "0"):
        return _fallback
    try:
        return importlib.import_module(f"{__name__}._core")
    except ImportError:
        return _fallback


kernels = load_backend()
BACKEND = kernels.BACKEND
