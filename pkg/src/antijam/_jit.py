"""Optional numba acceleration.

Every hot kernel in the package is written in the subset of Python/numpy
that numba compiles in nopython mode.  When numba is importable and the
environment variable ``ANTIJAM_DISABLE_NUMBA`` is unset (or ``0``), the
kernels are compiled with ``numba.njit``; otherwise they run as ordinary
Python over numpy arrays.  Both paths execute the same source, so results
agree up to floating-point rounding of ``tanh``/BLAS calls.

The flag is read once at import time.

Numba's on-disk cache only tracks the file that defines a kernel, not
the kernels it inlines from other modules, so the cache directory is
keyed by a hash of every kernel source file.
"""
from __future__ import annotations

import hashlib
import os
from pathlib import Path

_FLAG = "ANTIJAM_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "0").strip().lower() in ("", "0", "false", "no")


def _cache_dir() -> str:
    here = Path(__file__).resolve().parent
    h = hashlib.sha256()
    for src in sorted((here / "kernels").glob("*.py")):
        h.update(src.read_bytes())
    return str(here / "__pycache__" / f"numba-{h.hexdigest()[:12]}")


try:  # pragma: no cover - depends on the environment
    if not _numba_requested():
        raise ImportError
    os.environ.setdefault("NUMBA_CACHE_DIR", _cache_dir())
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_ENABLED = _numba is not None


def jit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` when acceleration is on."""
    if _numba is None:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
