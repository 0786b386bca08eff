"""Exact star discrepancy for small point sets and first-order Sobol' indices."""

from __future__ import annotations

import numpy as np

from .core import InputError, TooLarge, ZeroVariance
from .sampling import SeededStream

MAX_DIM = 3
MAX_POINTS = 200


def star_discrepancy(points) -> float:
    """Exact ``sup_x |F_m(x) - vol([0, x))|`` over anchored boxes.

    The supremum over open boxes ``[0, x)`` of ``vol - F`` and over closed boxes
    ``[0, x]`` of ``F - vol`` is attained with every corner coordinate drawn
    from the point coordinates (plus 1 for the open boxes), so it suffices to
    evaluate counts on that grid. Counts come from a cumulative-sum histogram.
    """
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if P.ndim != 2 or P.shape[0] == 0:
        raise InputError("need a nonempty (m, d) array of points")
    m, d = P.shape
    if d > MAX_DIM or m > MAX_POINTS:
        raise TooLarge(f"exact discrepancy limited to d <= {MAX_DIM}, m <= {MAX_POINTS}")
    if np.any((P < 0) | (P > 1)):
        raise InputError("points must lie in [0, 1]")

    grids, ranks = [], []
    for k in range(d):
        g = np.union1d(P[:, k], [1.0])
        grids.append(g)
        ranks.append(np.searchsorted(g, P[:, k]))
    shape = tuple(len(g) for g in grids)
    H = np.zeros(shape)
    np.add.at(H, tuple(ranks), 1.0)
    closed = H
    for k in range(d):
        closed = np.cumsum(closed, axis=k)
    # open count at grid index a = closed count at a - 1 along every axis
    open_ = np.pad(closed, [(1, 0)] * d)[tuple(slice(0, s) for s in shape)]
    vol = grids[0]
    for g in grids[1:]:
        vol = np.multiply.outer(vol, g)
    return float(max(np.max(vol - open_ / m), np.max(closed / m - vol)))


def sobol_first_order(f, N: int, stream: SeededStream, dim: int | None = None) -> np.ndarray:
    """Pick-freeze estimates of ``Var(E[f | x_j]) / Var(f)`` for each input.

    Two independent ``N x dim`` uniform matrices ``A`` and ``B``; for each
    ``j`` the matrix ``AB_j`` is ``A`` with column ``j`` taken from ``B``, and
    ``S_j = mean(f(B) (f(AB_j) - f(A))) / Var``. Estimates are clipped to
    ``[0, 1]``.
    """
    if N < 2**10:
        raise InputError("N must be at least 1024")
    dim = getattr(f, "dim", None) if dim is None else dim
    if dim is None:
        dim = f.p
    rng = stream.generator()
    A = rng.random((N, dim))
    B = rng.random((N, dim))
    fA = np.asarray(f(A), dtype=np.float64)
    fB = np.asarray(f(B), dtype=np.float64)
    var = np.var(np.concatenate([fA, fB]))
    if var < 1e-14:
        raise ZeroVariance("output variance is numerically zero")
    S = np.empty(dim)
    for j in range(dim):
        ABj = A.copy()
        ABj[:, j] = B[:, j]
        S[j] = np.mean(fB * (np.asarray(f(ABj)) - fA)) / var
    return np.clip(S, 0.0, 1.0)
