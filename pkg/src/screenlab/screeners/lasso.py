"""Lasso by cyclic coordinate descent, with K-fold cross-validation.

Columns are standardized to mean 0 and unit population variance, the
response is centred, and the intercept is left unpenalised. On the
standardized scale the coordinate update is a plain soft-threshold because
``x_j' x_j / n = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import (
    InputError,
    NoConvergence,
    ScreeningOutcome,
    VariableSet,
    as_matrix,
    as_vector,
)
from ..sampling import FOLDS, SeededStream
from .marginal import _standardize, ranked, sis_scores

N_LAMBDA = 100
LAMBDA_RATIO = 1e-3
TOL = 1e-7
MAX_SWEEPS = 100_000
DEFAULT_FOLDS = 10
# active-set sweeps between attempts at an exact sign-consistent solve
SOLVE_EVERY = 10
# path stops once the explained fraction of deviance reaches DEV_MAX or
# gains less than DEV_STEP between consecutive penalties
DEV_MAX = 0.999
DEV_STEP = 1e-5


@njit(cache=True)
def _soft(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


@njit(cache=True)
def _coord_pass(XT, r, beta, lam, idx, count):
    # one cyclic pass over idx[:count]; returns the largest coefficient change
    n = XT.shape[1]
    maxd = 0.0
    for k in range(count):
        j = idx[k]
        g = 0.0
        for i in range(n):
            g += XT[j, i] * r[i]
        bj = beta[j]
        new = _soft(bj + g / n, lam)
        d = new - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= d * XT[j, i]
            beta[j] = new
            if abs(d) > maxd:
                maxd = abs(d)
    return maxd


@njit(cache=True)
def _objective(r, beta, lam):
    n = r.shape[0]
    return 0.5 * (r @ r) / n + lam * np.sum(np.abs(beta))


@njit(cache=True)
def _newton_step(XT, yc, r, beta, lam, idx, na):
    # Minimise the objective restricted to the current sign orthant of the
    # active set: solve X_A'(y - X_A b)/n = lam*s and move from beta toward b.
    # If a coefficient reaches zero first, stop there, drop it, and re-solve
    # on the smaller set. Centred columns span at most n-1 dimensions, so a
    # larger active set is cut to its n-1 largest coefficients first. The
    # result is kept only if the penalised objective decreased; returns True when a
    # full sign-consistent step landed. Convergence is still judged by the
    # caller's coordinate sweeps.
    n = XT.shape[1]
    saved = beta[idx[:na]].copy()
    old_r = r.copy()
    before = _objective(r, beta, lam)
    if na < n:
        keep = idx[:na].copy()
        m = na
    else:
        m = n - 1
        order = np.argsort(-np.abs(saved))
        keep = idx[:na][order[:m]].copy()
        for k in range(m, na):
            beta[idx[order[k]]] = 0.0
    full = False
    while m > 0:
        XA = np.empty((m, n))
        s = np.empty(m)
        cur = np.empty(m)
        for k in range(m):
            XA[k] = XT[keep[k]]
            cur[k] = beta[keep[k]]
            s[k] = 1.0 if cur[k] > 0 else -1.0
        G = XA @ XA.T / n
        c = XA @ yc / n - lam * s
        try:
            b = np.linalg.solve(G, c)
        except Exception:
            break
        t = 1.0
        hit = -1
        ok = True
        for k in range(m):
            if not np.isfinite(b[k]):
                ok = False
                break
            if b[k] * s[k] <= 0.0:
                tk = cur[k] / (cur[k] - b[k])
                if tk < t:
                    t = tk
                    hit = k
        if not ok:
            break
        for k in range(m):
            beta[keep[k]] = cur[k] + t * (b[k] - cur[k])
        if hit < 0:
            full = True
            break
        beta[keep[hit]] = 0.0
        keep[hit:m - 1] = keep[hit + 1:m].copy()
        m -= 1
    for i in range(n):
        acc = yc[i]
        for k in range(na):
            acc -= XT[idx[k], i] * beta[idx[k]]
        r[i] = acc
    if _objective(r, beta, lam) > before:
        for k in range(na):
            beta[idx[k]] = saved[k]
        r[:] = old_r
        return False
    return full


@njit(cache=True)
def _cd_path(XT, yc, lambdas, tol, max_sweeps, dev_max, dev_step):
    # XT is (p, n): row j holds standardized column j. Returns the path, the
    # index of a penalty that hit the sweep cap (or -1), and the number of
    # penalties solved before the deviance stopping rule fired.
    p, n = XT.shape
    null = yc @ yc
    prev = 0.0
    L = lambdas.shape[0]
    path = np.zeros((L, p))
    beta = np.zeros(p)
    r = yc.copy()
    every = np.arange(p)
    active = np.empty(p, dtype=np.int64)
    for l in range(L):
        lam = lambdas[l]
        sweeps = 0
        while True:
            maxd = _coord_pass(XT, r, beta, lam, every, p)
            sweeps += 1
            if maxd < tol:
                break
            na = 0
            for j in range(p):
                if beta[j] != 0.0:
                    active[na] = j
                    na += 1
            inner = 0
            while True:
                maxd = _coord_pass(XT, r, beta, lam, active, na)
                sweeps += 1
                inner += 1
                if maxd < tol or sweeps > max_sweeps:
                    break
                if inner % SOLVE_EVERY == 0:
                    if _newton_step(XT, yc, r, beta, lam, active, na):
                        break
            if sweeps > max_sweeps:
                return path, l, l
        path[l] = beta
        if null > 0.0:
            frac = 1.0 - (r @ r) / null
            if frac >= dev_max or (l > 0 and frac - prev < dev_step * frac):
                return path, -1, l + 1
            prev = frac
    return path, -1, L


@dataclass(frozen=True, eq=False)
class LassoFit:
    """One point on the Lasso path, reported on the original column scale."""

    lam: float
    intercept: float
    coefficients: np.ndarray
    active: VariableSet


def lambda_max(X, y) -> float:
    """Smallest penalty at which every standardized coefficient is zero."""
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    Xs, _ = _standardize(X)
    return float(np.max(np.abs(Xs.T @ (y - y.mean()))) / X.shape[0])


def lambda_grid(X, y, n_lambda: int = N_LAMBDA, ratio: float = LAMBDA_RATIO) -> np.ndarray:
    lmax = lambda_max(X, y)
    if lmax <= 0:
        lmax = 1.0
    return np.geomspace(lmax, lmax * ratio, n_lambda)


def _path_standardized(X, y, grid, tol, max_sweeps, truncate=True):
    Xs, live = _standardize(X)
    mu = X.mean(axis=0)
    sd = np.sqrt(np.mean((X - mu) ** 2, axis=0))
    sd[~live] = 1.0
    ybar = y.mean()
    path, failed, stop = _cd_path(
        np.ascontiguousarray(Xs.T), y - ybar, grid, tol, max_sweeps,
        DEV_MAX if truncate else 2.0, DEV_STEP if truncate else -1.0,
    )
    if failed >= 0:
        raise NoConvergence(float(grid[failed]))
    path = path[:stop]
    coef = path / sd
    intercepts = ybar - coef @ mu
    return coef, intercepts, path


def lasso_path(
    X, y, grid=None, *, tol: float = TOL, max_sweeps: int = MAX_SWEEPS, truncate: bool = False
) -> list[LassoFit]:
    """Warm-started Lasso fits along a strictly decreasing penalty grid.

    The default grid is 100 log-spaced values from ``lambda_max`` down to
    ``1e-3 * lambda_max``. With ``truncate`` the path ends early once the
    fit explains 99.9% of the deviance or stops gaining (relative gain below
    ``1e-5``), so the returned list may be shorter than the grid.
    """
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    grid = lambda_grid(X, y) if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
        raise InputError("lambda grid must be positive and strictly decreasing")
    coef, intercepts, _ = _path_standardized(X, y, grid, tol, max_sweeps, truncate)
    return [
        LassoFit(float(lam), float(b0), c, VariableSet.from_zero_based(np.flatnonzero(c)))
        for lam, b0, c in zip(grid, intercepts, coef)
    ]


def kkt_residual(X, y, fit: LassoFit) -> float:
    """Largest violation of the Lasso optimality conditions at ``fit``.

    For active ``j``: ``|x_j'r/n - lam * sign(beta_j)|``; for inactive ``j``:
    ``max(0, |x_j'r/n| - lam)``, with ``x`` the standardized columns.
    """
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    Xs, _ = _standardize(X)
    r = y - fit.intercept - X @ fit.coefficients
    g = Xs.T @ r / X.shape[0]
    act = fit.coefficients != 0
    v_act = np.abs(g[act] - fit.lam * np.sign(fit.coefficients[act]))
    v_in = np.maximum(np.abs(g[~act]) - fit.lam, 0.0)
    return float(max(v_act.max(initial=0.0), v_in.max(initial=0.0)))


def fold_ids(n: int, folds: int, stream: SeededStream) -> np.ndarray:
    perm = stream.generator(FOLDS).permutation(n)
    ids = np.empty(n, dtype=np.intp)
    ids[perm] = np.arange(n) % folds
    return ids


@dataclass(frozen=True, eq=False)
class LassoCV:
    lambdas: np.ndarray
    cv_error: np.ndarray
    best: int
    fit: LassoFit


def lasso_cv(X, y, folds: int = DEFAULT_FOLDS, stream: SeededStream | None = None) -> LassoCV:
    """Pick the penalty with the smallest mean K-fold prediction error.

    Every fold path uses the full-data grid; fold membership comes from the
    ``FOLDS`` sub-stream of ``stream``. The returned fit is the full-data
    solution at the chosen penalty, or at the last penalty before the
    full-data path stopped early.
    """
    X = as_matrix(X)
    n = X.shape[0]
    y = as_vector(y, n)
    if folds < 2 or folds > n:
        raise InputError(f"folds must lie in 2..n, got {folds}")
    stream = stream or SeededStream(0)
    grid = lambda_grid(X, y)
    ids = fold_ids(n, folds, stream)
    err = np.zeros(grid.shape[0])
    for k in range(folds):
        test = ids == k
        coef, b0, _ = _path_standardized(X[~test], y[~test], grid, TOL, MAX_SWEEPS)
        pred = X[test] @ coef.T + b0
        # penalties past an early stop reuse the last fit
        pad = grid.shape[0] - pred.shape[1]
        pred = np.concatenate([pred, np.repeat(pred[:, -1:], pad, axis=1)], axis=1)
        err += np.mean((y[test, None] - pred) ** 2, axis=0)
    err /= folds
    best = int(np.argmin(err))
    coef, b0, _ = _path_standardized(X, y, grid[: best + 1], TOL, MAX_SWEEPS)
    c = coef[-1]
    fit = LassoFit(
        float(grid[coef.shape[0] - 1]), float(b0[-1]), c, VariableSet.from_zero_based(np.flatnonzero(c))
    )
    return LassoCV(grid, err, best, fit)


def lasso_ranking(X, y, fit: LassoFit) -> np.ndarray:
    """0-based variable order: active by decreasing |coefficient|, then the rest by |correlation|."""
    c = np.abs(fit.coefficients)
    act = ranked(c)[: np.count_nonzero(c)]
    marg = sis_scores(X, y)
    marg[act] = -np.inf
    rest = ranked(marg)[: len(c) - len(act)]
    return np.concatenate([act, rest])


def lasso_outcome(X, y, cv: LassoCV, M: int, pad: bool = False) -> ScreeningOutcome:
    """Turn a cross-validated fit into a selection of at most ``M`` variables.

    More than ``M`` active variables: keep the ``M`` largest ``|coefficient|``.
    Fewer: keep them all, or with ``pad`` fill up to ``M`` with the
    unselected variables of largest marginal correlation.
    """
    order = lasso_ranking(X, y, cv.fit)
    k = M if pad else min(M, len(cv.fit.active))
    return ScreeningOutcome(
        np.abs(cv.fit.coefficients),
        VariableSet.from_zero_based(order[:k]),
        "lasso",
        info={
            "lambda": cv.fit.lam,
            "active_size": len(cv.fit.active),
            "padded": bool(pad and k > len(cv.fit.active)),
            "ranking": (order + 1).tolist(),
        },
    )


def lasso_screen(
    X, y, M: int, folds: int = DEFAULT_FOLDS, stream: SeededStream | None = None, *, pad: bool = False
) -> ScreeningOutcome:
    """Cross-validated Lasso selection of at most ``M`` variables (see ``lasso_outcome``)."""
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    if not 0 <= M <= X.shape[1] or M >= X.shape[0]:
        raise InputError(f"M={M} must satisfy M <= p and M < n")
    return lasso_outcome(X, y, lasso_cv(X, y, folds, stream), M, pad)
