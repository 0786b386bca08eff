"""Heuristic and exact solvers for size-``M`` least-squares subset selection.

:func:`foss_screen` starts from an initial subset, fills it greedily by
orthogonalised residual correlation, then runs a best-improvement
single-swap local search. Every candidate swap is scored in closed form from
one QR factorisation of the current model, so an iteration costs
``O(n M p)``.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np
from scipy.linalg import solve_triangular

from ..core import (
    InputError,
    ScreeningOutcome,
    SubsetTooLarge,
    TooManySubsets,
    VariableSet,
    as_matrix,
    as_variable_set,
    as_vector,
)
from .marginal import ranked, sis_scores

SWAP_TOL = 1e-10
MAX_SUBSETS = 10**6
# a candidate whose residualised column norm^2 falls below this fraction of its
# centred norm^2 is treated as collinear with the current model
_COLLINEAR = 1e-10


def _design(X: np.ndarray, S) -> np.ndarray:
    Z = np.empty((X.shape[0], len(S) + 1))
    Z[:, 0] = 1.0
    Z[:, 1:] = X[:, S]
    return Z


def subset_rss(X: np.ndarray, y: np.ndarray, S) -> float:
    Q, _ = np.linalg.qr(_design(X, list(S)))
    r = y - Q @ (Q.T @ y)
    return float(r @ r)


def _forward_fill(X, y, S: list[int], M: int, cnorm: np.ndarray) -> list[int]:
    S = list(S)
    p = X.shape[1]
    while len(S) < M:
        Q, _ = np.linalg.qr(_design(X, S))
        out = np.setdiff1d(np.arange(p), S)
        Xo = X[:, out]
        Ro = Xo - Q @ (Q.T @ Xo)
        r = y - Q @ (Q.T @ y)
        den = np.einsum("ij,ij->j", Ro, Ro)
        ok = den > _COLLINEAR * cnorm[out]
        gain = np.full(out.shape[0], -1.0)
        gain[ok] = (r @ Ro[:, ok]) ** 2 / den[ok]
        S.append(int(out[int(np.argmax(gain))]))
    return S


def _swap_search(X, y, S: list[int], cnorm: np.ndarray, tol: float = SWAP_TOL):
    """Best-improvement single swaps until no swap lowers RSS by more than ``tol``.

    For the current subset with QR basis ``Q`` of ``[1, X_S]`` and residual
    ``r``, dropping member ``i`` and adding outsider ``j`` gives::

        RSS' = RSS + a_i^2 - (r'x_j + a_i c_ij)^2 / (|z_j|^2 + c_ij^2)

    where ``q_i`` is the unit direction ``x_i`` contributes beyond the rest of
    the model, ``a_i = q_i'y``, ``c_ij = q_i'x_j`` and ``z_j`` is ``x_j``
    residualised on the full current model.
    """
    p = X.shape[1]
    S = sorted(S)
    Z = _design(X, S)
    Q, R = np.linalg.qr(Z)
    r = y - Q @ (Q.T @ y)
    cur = float(r @ r)
    history = [cur]
    while len(S) < p:
        W = solve_triangular(R, Q.T, lower=False).T  # Z (Z'Z)^{-1}
        Wm = W[:, 1:]
        Qs = Wm / np.sqrt(np.einsum("ij,ij->j", Wm, Wm))
        a = Qs.T @ y
        out = np.setdiff1d(np.arange(p), S)
        Xo = X[:, out]
        Ro = Xo - Q @ (Q.T @ Xo)
        zz = np.einsum("ij,ij->j", Ro, Ro)
        rx = r @ Xo
        C = Qs.T @ Xo
        den = zz[None, :] + C * C
        num = rx[None, :] + a[:, None] * C
        ok = den > _COLLINEAR * cnorm[out][None, :]
        cand = np.full(den.shape, np.inf)
        cand[ok] = cur + (a[:, None] ** 2 - num * num / np.where(ok, den, 1.0))[ok]
        k = int(np.argmin(cand))
        i, j = divmod(k, out.shape[0])
        if not cur - cand[i, j] > tol:
            break
        trial = sorted(S[:i] + S[i + 1 :] + [int(out[j])])
        Zt = _design(X, trial)
        Qt, Rt = np.linalg.qr(Zt)
        rt = y - Qt @ (Qt.T @ y)
        new = float(rt @ rt)
        if not cur - new > tol:
            break
        S, Q, R, r, cur = trial, Qt, Rt, rt, new
        history.append(cur)
    return S, cur, history


def _fit_scores(X, y, S: list[int]) -> np.ndarray:
    """|least-squares coefficient| x column sd for members of ``S``; 0 elsewhere."""
    scores = np.zeros(X.shape[1])
    if not S:
        return scores
    coef, *_ = np.linalg.lstsq(_design(X, S), y, rcond=None)
    scores[S] = np.abs(coef[1:]) * X[:, S].std(axis=0)
    return scores


def foss_screen(X, y, M: int, init=None, stream=None) -> ScreeningOutcome:
    """Approximate the best size-``M`` subset by forward filling plus swaps.

    ``init`` may be a :class:`VariableSet` or a 1-based sequence; a sequence is
    taken as a priority order when it must be trimmed. Two starts are built,
    ``init`` padded by marginal correlation and ``init`` filled greedily, and
    the search begins from the one with smaller RSS, so the result never has a
    larger RSS than the padded initial subset.
    """
    X = as_matrix(X)
    n, p = X.shape
    y = as_vector(y, n)
    if not 0 <= M <= p:
        raise InputError(f"M={M} must lie in 0..{p}")
    if M >= n:
        raise SubsetTooLarge(f"M={M} must be smaller than n={n}")
    marg_order = ranked(sis_scores(X, y)) if n >= 3 else np.arange(p)

    if init is None:
        start = []
    elif isinstance(init, VariableSet):
        start = list(init.zero_based())
    else:
        start = [int(i) - 1 for i in init]
    if any(j < 0 or j >= p for j in start):
        raise InputError("init indices must lie in 1..p")
    start = list(dict.fromkeys(start))
    if len(start) > M:
        if isinstance(init, VariableSet):
            pos = {int(j): k for k, j in enumerate(marg_order)}
            start = sorted(start, key=pos.__getitem__)
        start = start[:M]

    padded = start + [int(j) for j in marg_order if j not in set(start)][: M - len(start)]
    cnorm = np.sum((X - X.mean(axis=0)) ** 2, axis=0)
    init_rss = subset_rss(X, y, padded)
    filled = _forward_fill(X, y, start, M, cnorm)
    fill_rss = subset_rss(X, y, filled)
    S0 = filled if fill_rss < init_rss else padded

    S, cur, history = _swap_search(X, y, S0, cnorm)
    return ScreeningOutcome(
        _fit_scores(X, y, S),
        VariableSet.from_zero_based(S),
        "foss",
        info={"rss": cur, "init_rss": init_rss, "swaps": len(history) - 1, "rss_history": history},
    )


def exhaustive_best_subset(X, y, M: int, *, reverse: bool = False) -> VariableSet:
    """Globally RSS-optimal size-``M`` subset by enumeration.

    Exact ties resolve to the lexicographically smallest subset whichever
    direction the enumeration runs.
    """
    X = as_matrix(X)
    n, p = X.shape
    y = as_vector(y, n)
    if not 0 <= M <= p:
        raise InputError(f"M={M} must lie in 0..{p}")
    if comb(p, M) > MAX_SUBSETS:
        raise TooManySubsets(f"C({p}, {M}) = {comb(p, M)} exceeds {MAX_SUBSETS}")
    combos = itertools.combinations(range(p), M)
    if reverse:
        combos = reversed(list(combos))
    best, best_rss = None, np.inf
    for S in combos:
        r = subset_rss(X, y, S)
        if r < best_rss or (r == best_rss and S < best):
            best, best_rss = S, r
    return VariableSet.from_zero_based(best)
