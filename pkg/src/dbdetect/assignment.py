"""Maximum-weight perfect assignment with a compiled core.

The compiled backend (``_sap_cy``, built from Cython at install time) is
selected when importable, the pure-Python twin otherwise; both implement the
same O(n^3) shortest-augmenting-path method and return identical results.
``benchmarks/bench_assignment.py`` compares the two.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from . import _sap_py

try:  # pragma: no cover - depends on how the package was built
    from . import _sap_cy as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover
    _impl = _sap_py
    BACKEND = "python"


def backend() -> str:
    """Name of the active solver backend: 'cython' or 'python'."""
    return BACKEND


def solve_max(weights: np.ndarray, use_backend: str | None = None):
    """Maximum-weight perfect assignment of a square weight matrix.

    Returns ``(row_to_col, value)`` where ``value`` is the summed weight of
    the optimal assignment.  ``use_backend`` forces 'python' or 'cython'
    (used by the equivalence tests and the benchmark).
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
        raise ValidationError(f"weights must be a square matrix, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    if use_backend is None:
        impl = _impl
    elif use_backend == "python":
        impl = _sap_py
    elif use_backend == "cython":
        if BACKEND != "cython":
            raise ValidationError("cython backend requested but not built")
        impl = _impl
    else:
        raise ValidationError(f"unknown backend {use_backend!r}")
    row_to_col = np.asarray(impl.solve_min(-w), dtype=np.int64)
    value = float(w[np.arange(w.shape[0]), row_to_col].sum())
    return row_to_col, value
