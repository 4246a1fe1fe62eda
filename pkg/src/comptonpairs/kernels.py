"""Kernel backend selection.

The compiled kernel is preferred when its extension imported cleanly;
the pure-Python kernel is the fallback.  Both walk the RNG stream
identically, so swapping backends never changes results, only speed.
Set COMPTONPAIRS_KERNEL=python|cython to force a choice (forcing cython
raises if the extension is unavailable).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

_forced = os.environ.get("COMPTONPAIRS_KERNEL", "").strip().lower()
if _forced == "python":
    _impl = _kernels_py
elif _forced == "cython":
    if _kernels_cy is None:
        raise ImportError("COMPTONPAIRS_KERNEL=cython but the compiled "
                          "kernel is not available")
    _impl = _kernels_cy
elif _forced:
    raise ValueError(f"unknown COMPTONPAIRS_KERNEL value {_forced!r}")
else:
    _impl = _kernels_cy if _kernels_cy is not None else _kernels_py

BACKEND: str = _impl.BACKEND
HAVE_CYTHON: bool = _kernels_cy is not None

generate = _impl.generate


def backends() -> dict[str, object]:
    """Available kernel modules keyed by name (for benchmarks and tests)."""
    out = {"python": _kernels_py}
    if _kernels_cy is not None:
        out["cython"] = _kernels_cy
    return out
