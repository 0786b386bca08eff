"""Marginal (one-variable-at-a-time) screening statistics.

Constant columns, and a constant response, score 0 in every method.
"""

from __future__ import annotations

import numpy as np

from ..core import InputError, VariableSet, as_matrix, as_vector

_EPS = 1e-14


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Columns centred and scaled to unit (population) variance; constant columns -> 0."""
    Xc = X - X.mean(axis=0)
    sd = np.sqrt(np.mean(Xc * Xc, axis=0))
    live = sd > _EPS * np.maximum(1.0, np.abs(X).max(axis=0))
    out = np.zeros_like(Xc)
    out[:, live] = Xc[:, live] / sd[live]
    return out, live


def sis_scores(X, y) -> np.ndarray:
    """Absolute Pearson correlation of each column with ``y``."""
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    if X.shape[0] < 3:
        raise InputError("SIS needs n >= 3")
    Xs, _ = _standardize(X)
    ys, live = _standardize(y[:, None])
    if not live[0]:
        return np.zeros(X.shape[1])
    r = Xs.T @ ys[:, 0] / X.shape[0]
    return np.minimum(np.abs(r), 1.0)


def sirs_scores(X, y) -> np.ndarray:
    """Ranking statistic ``mean_k [ mean_i x_ij 1{y_i < y_k} ]^2`` on standardized columns."""
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    n = X.shape[0]
    if n < 3:
        raise InputError("SIRS needs n >= 3")
    Xs, _ = _standardize(X)
    # sum over {i : y_i < y_k} is a prefix sum in y order
    order = np.argsort(y, kind="stable")
    prefix = np.vstack([np.zeros(X.shape[1]), np.cumsum(Xs[order], axis=0)])
    below = np.searchsorted(y[order], y, side="left")
    omega = prefix[below] / n
    return np.mean(omega * omega, axis=0)


def _double_center(D: np.ndarray) -> np.ndarray:
    # D has shape (n, n, ...) ; centre over the first two axes
    return D - D.mean(axis=0, keepdims=True) - D.mean(axis=1, keepdims=True) + D.mean(axis=(0, 1), keepdims=True)


def dcsis_scores(X, y, chunk: int | None = None) -> np.ndarray:
    """Empirical distance correlation between each column and ``y``.

    Uses the V-statistic ``dCov^2 = mean(A * B)`` with ``A``, ``B`` the
    double-centred pairwise distance matrices. Because ``B`` is centred, the
    column's distance matrix does not need centring for the cross term.
    """
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    n, p = X.shape
    if n < 4:
        raise InputError("DC-SIS needs n >= 4")
    B = _double_center(np.abs(y[:, None] - y[None, :]))
    vy = np.mean(B * B)
    scores = np.zeros(p)
    if vy <= _EPS:
        return scores
    if chunk is None:
        chunk = max(1, (1 << 22) // (n * n))
    for s in range(0, p, chunk):
        blk = X[:, s : s + chunk]
        a = np.abs(blk[:, None, :] - blk[None, :, :])
        cov = np.einsum("ikj,ik->j", a, B) / (n * n)
        A = _double_center(a)
        vx = np.einsum("ikj,ikj->j", A, A) / (n * n)
        ok = vx > _EPS
        denom = np.sqrt(vx[ok] * vy)
        scores[s : s + chunk][ok] = np.sqrt(np.clip(cov[ok] / denom, 0.0, None))
    return np.minimum(scores, 1.0)


def top_m(scores, M: int) -> VariableSet:
    """The ``M`` highest-scoring variables; ties go to the smaller index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= M <= scores.shape[0]:
        raise InputError(f"M={M} must lie in 0..{scores.shape[0]}")
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    return VariableSet.from_zero_based(order[:M])


def ranked(scores) -> np.ndarray:
    """0-based indices sorted by decreasing score, ties to the smaller index."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(scores.shape[0]), -scores))
