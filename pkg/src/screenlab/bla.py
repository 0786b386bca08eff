"""Best linear approximation (BLA) of a function on the unit cube.

Two routes to the same object:

* :func:`bla_closed_form` integrates ``f`` against the uniform measure and
  applies the moment formulas ``beta_j = 12 (E[x_j f] - E[f] / 2)`` and
  ``beta_0 = E[f] - sum(beta) / 2``;
* :func:`ls_fit` estimates a subset BLA from data by ordinary least squares
  on the bordered Gram system ``[[n, 1'X_A], [X_A'1, X_A'X_A]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .core import (
    InputError,
    NonFiniteEvaluation,
    SingularGram,
    SubsetModel,
    SubsetTooLarge,
    VariableSet,
    as_matrix,
    as_variable_set,
    as_vector,
)

# smallest / largest singular value of the bordered Gram matrix
SINGULAR_RATIO = 1e-10
QMC_POINTS = 2**16
_QMC_SEED = 12345
_CHUNK = 1 << 15


@dataclass(frozen=True)
class IntegrableFunction:
    """A deterministic map from ``[0, 1)^dim`` to the reals.

    ``eval`` is vectorised: it takes an ``(N, dim)`` array and returns ``N``
    values.
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(np.atleast_2d(x)), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class BlaResult:
    intercept: float
    coefficients: np.ndarray
    quadrature_points: int
    mean: float
    first_moments: np.ndarray

    def margin(self, active: Sequence[int]) -> float:
        """``min_j |E[x_j f] - E[f]/2|`` over the 1-based ``active`` indices.

        This is the detectability margin of the active block; every active
        coefficient then satisfies ``|beta_j| = 12 * margin_j``.
        """
        idx = np.asarray(list(active), dtype=np.intp) - 1
        return float(np.min(np.abs(self.first_moments[idx] - 0.5 * self.mean)))

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coefficients": self.coefficients.tolist(),
            "quadrature_points": self.quadrature_points,
            "mean": self.mean,
        }


def quadrature_nodes(dim: int, n_quad: int) -> np.ndarray:
    """Equal-weight integration nodes on ``[0, 1)^dim``.

    Tensor midpoint grid for ``dim <= 3`` (``floor(n_quad ** (1/dim))`` nodes per
    axis); scrambled Sobol' points for higher dimension, at least ``2**16`` of
    them. Deterministic for a given ``(dim, n_quad)``.
    """
    if dim <= 3:
        k = _per_axis(dim, n_quad)
        return _tensor(dim, (np.arange(k) + 0.5) / k)
    m = int(np.ceil(np.log2(max(n_quad, QMC_POINTS))))
    return qmc.Sobol(d=dim, scramble=True, seed=_QMC_SEED).random_base2(m)


def _per_axis(dim: int, n_quad: int) -> int:
    return max(1, int(np.floor(n_quad ** (1.0 / dim) + 1e-9)))


def _tensor(dim: int, axis: np.ndarray) -> np.ndarray:
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def quadrature(dim: int, n_quad: int, rule: str = "midpoint") -> tuple[np.ndarray, np.ndarray | None]:
    """Nodes and weights (``None`` for equal weights) of an integration rule.

    ``"midpoint"`` is :func:`quadrature_nodes`. ``"gauss"`` is a tensor
    Gauss-Legendre rule with the same per-axis count (``dim <= 3`` only),
    exact for polynomials of degree below twice that count.
    """
    if rule == "midpoint":
        return quadrature_nodes(dim, n_quad), None
    if rule != "gauss":
        raise InputError(f"unknown quadrature rule {rule!r}")
    if dim > 3:
        raise InputError("the Gauss rule is limited to dim <= 3")
    t, w = np.polynomial.legendre.leggauss(_per_axis(dim, n_quad))
    return _tensor(dim, (t + 1) / 2), np.prod(_tensor(dim, w / 2), axis=1)


def integrate_moments(
    f: Callable[[np.ndarray], np.ndarray], nodes: np.ndarray, weight=None, node_weights=None
) -> tuple[float, np.ndarray]:
    """Return ``(E[f], E[w(x_j) f] for each j)`` under the given rule.

    ``weight`` is applied coordinate-wise and defaults to the identity;
    ``node_weights`` defaults to equal weights.
    """
    total = 0.0
    moments = 0.0
    for start in range(0, nodes.shape[0], _CHUNK):
        block = nodes[start : start + _CHUNK]
        vals = np.asarray(f(block), dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteEvaluation("function returned a non-finite value at a quadrature node")
        if node_weights is not None:
            vals = vals * node_weights[start : start + _CHUNK] * nodes.shape[0]
        w = block if weight is None else weight(block)
        total += vals.sum()
        moments += w.T @ vals
    N = nodes.shape[0]
    return total / N, moments / N


def bla_closed_form(f: IntegrableFunction, n_quad: int = QMC_POINTS, *, rule: str = "midpoint") -> BlaResult:
    if n_quad < 1024:
        raise InputError("n_quad must be at least 1024")
    nodes, wts = quadrature(f.dim, n_quad, rule)
    mean, mom = integrate_moments(f, nodes, node_weights=wts)
    coef = 12.0 * (mom - 0.5 * mean)
    intercept = mean - 0.5 * coef.sum()
    return BlaResult(float(intercept), coef, nodes.shape[0], float(mean), mom)


def moment_matrix(m: int) -> np.ndarray:
    """Second-moment matrix of ``(1, x_1, ..., x_m)`` under Uniform[0,1]^m."""
    U = np.full((m + 1, m + 1), 0.25)
    U[0, :] = U[:, 0] = 0.5
    U[0, 0] = 1.0
    U[np.arange(1, m + 1), np.arange(1, m + 1)] = 1.0 / 3.0
    return U


def precision_inverse(m: int) -> np.ndarray:
    """Closed-form inverse of :func:`moment_matrix` (all entries are integers)."""
    if m < 1:
        raise InputError("m must be at least 1")
    Uinv = 12.0 * np.eye(m + 1)
    Uinv[0, 1:] = Uinv[1:, 0] = -6.0
    Uinv[0, 0] = 1.0 + 3.0 * m
    return Uinv


def ls_fit(X, y, A: VariableSet | Sequence[int] | None = None) -> SubsetModel:
    """Least-squares intercept and coefficients of ``y`` on the columns ``A``.

    Solves the bordered normal equations with an SVD; if the smallest
    singular value is below ``1e-10`` times the largest the system is
    declared singular.
    """
    X = as_matrix(X)
    n = X.shape[0]
    y = as_vector(y, n)
    A = as_variable_set(A)
    if not A.within(X.shape[1]):
        raise InputError(f"subset {A} exceeds p={X.shape[1]}")
    if len(A) >= n:
        raise SubsetTooLarge(f"|A|={len(A)} must be smaller than n={n}")
    if len(A) == 0:
        ybar = float(y.mean())
        return SubsetModel(A, ybar, np.zeros(0), float(np.sum((y - ybar) ** 2)))

    Z = np.empty((n, len(A) + 1))
    Z[:, 0] = 1.0
    Z[:, 1:] = X[:, A.zero_based()]
    G = Z.T @ Z
    b = Z.T @ y
    U, s, Vt = np.linalg.svd(G)
    if s[-1] < SINGULAR_RATIO * s[0]:
        raise SingularGram(
            f"bordered Gram matrix for {A} is singular (s_min/s_max={s[-1] / s[0]:.3g})"
        )
    coef = Vt.T @ ((U.T @ b) / s)
    resid = y - Z @ coef
    # one refinement step on the normal equations
    coef = coef + Vt.T @ ((U.T @ (Z.T @ resid)) / s)
    resid = y - Z @ coef
    return SubsetModel(A, float(coef[0]), coef[1:].copy(), float(resid @ resid))


def rss(X, y, A: VariableSet | Sequence[int] | None = None) -> float:
    return ls_fit(X, y, A).rss
