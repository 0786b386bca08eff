"""Choosing the screening size ``M``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import InputError, as_matrix, as_vector
from .screeners import exhaustive_best_subset, foss_screen, subset_rss


TIE_TOL = 1e-12


def default_m(n: int) -> int:
    """``round(n / ln n)`` clamped to ``[1, n - 2]``."""
    if n < 3:
        raise InputError("default_m needs n >= 3")
    return int(min(max(1, round(n / math.log(n))), n - 2))


def gcv_value(rss: float, n: int, M: int) -> float:
    return rss / (n * (1.0 - M / n) ** 2)


def foss_solver(init_order=None) -> Callable:
    """Subset solver returning the FOSS RSS at size ``M``.

    ``init_order`` (1-based priority order) seeds FOSS with its first ``M``
    entries.
    """

    def solve(X, y, M):
        init = None if init_order is None else list(init_order[:M])
        return foss_screen(X, y, M, init).info["rss"]

    return solve


def exhaustive_solver(X, y, M):
    S = exhaustive_best_subset(X, y, M)
    return subset_rss(np.asarray(X), np.asarray(y), S.zero_based())


def gcv(X, y, M: int, solver: Callable | None = None) -> float:
    """``min-RSS(M) / (n (1 - M/n)^2)`` with the minimum taken by ``solver``."""
    X = as_matrix(X)
    n = X.shape[0]
    y = as_vector(y, n)
    if not 1 <= M < n:
        raise InputError(f"need 1 <= M < n, got M={M}, n={n}")
    solver = solver or foss_solver()
    return gcv_value(float(solver(X, y, M)), n, M)


def search_interval(n: int, m0: int, p: int | None = None) -> tuple[int, int]:
    dm = default_m(n)
    lo, hi = min(m0, dm), max(m0, dm)
    hi = min(hi, n - 2 if p is None else min(p, n - 2))
    lo = max(1, min(lo, hi))
    return lo, hi


def gcv_curve(X, y, m0: int, *, solver: Callable | None = None, init_order=None) -> dict[int, float]:
    """GCV at every integer ``M`` between ``m0`` and ``default_m(n)`` inclusive."""
    X = as_matrix(X)
    n, p = X.shape
    y = as_vector(y, n)
    lo, hi = search_interval(n, min(max(m0, 1), n - 1), p)
    solver = solver or foss_solver(init_order)
    return {M: gcv(X, y, M, solver) for M in range(lo, hi + 1)}


def select_m(X, y, m0: int, stream=None, *, solver: Callable | None = None, init_order=None) -> int:
    """GCV-minimising screening size between ``m0`` and ``default_m(n)``.

    ``m0`` is normally the active-set size of the cross-validated Lasso. A
    degenerate interval is returned without evaluating GCV; ties go to the
    smaller ``M``, where values within ``1e-12 * TSS / n`` of the minimum
    count as tied (an exact fit leaves RSS at rounding level for every
    ``M``).
    """
    X = as_matrix(X)
    n, p = X.shape
    y = as_vector(y, n)
    lo, hi = search_interval(n, min(max(m0, 1), n - 1), p)
    if lo == hi:
        return lo
    curve = gcv_curve(X, y, m0, solver=solver, init_order=init_order)
    return argmin_gcv(curve, float(np.sum((y - y.mean()) ** 2)) / n)


def argmin_gcv(curve: dict[int, float], scale: float = 0.0) -> int:
    """Smallest ``M`` whose GCV is within ``TIE_TOL * scale`` of the minimum."""
    best = min(curve.values())
    return min(M for M, v in curve.items() if v <= best + TIE_TOL * scale)
