"""Backend selection for the hot geometry kernel.

The compiled extension (``tip._speedups``) is used when it importable;
setting the environment variable ``TIP_PURE_PYTHON=1`` forces the NumPy
reference implementation. Both backends implement the identical contract
documented in :mod:`tip.geometry` and agree to float round-off.
"""

from __future__ import annotations

import os

from .geometry import traj_world_metrics_numpy

__all__ = ["traj_world_metrics", "active_backend", "HAVE_COMPILED"]

try:
    from . import _speedups  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    _speedups = None
    HAVE_COMPILED = False

_FORCE_PURE = bool(os.environ.get("TIP_PURE_PYTHON"))

if HAVE_COMPILED and not _FORCE_PURE:
    traj_world_metrics = _speedups.traj_world_metrics
    _BACKEND = "compiled"
else:
    traj_world_metrics = traj_world_metrics_numpy
    _BACKEND = "numpy"


def active_backend() -> str:
    """'compiled' (Cython extension) or 'numpy' (pure-Python fallback)."""
    return _BACKEND
