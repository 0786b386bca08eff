"""The five screening methods and a common dispatcher."""

from __future__ import annotations

from enum import Enum

from ..core import InputError, ScreeningOutcome, as_matrix, as_vector
from .foss import exhaustive_best_subset, foss_screen, subset_rss
from .lasso import (
    LassoCV,
    LassoFit,
    kkt_residual,
    lambda_grid,
    lambda_max,
    lasso_cv,
    lasso_outcome,
    lasso_path,
    lasso_ranking,
    lasso_screen,
)
from .marginal import dcsis_scores, ranked, sirs_scores, sis_scores, top_m


class ScreenerId(str, Enum):
    SIS = "sis"
    SIRS = "sirs"
    DCSIS = "dcsis"
    LASSO = "lasso"
    FOSS = "foss"

    @classmethod
    def parse(cls, value) -> "ScreenerId":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "").replace("_", "")
        aliases = {"lsis": "sis", "llasso": "lasso", "lfoss": "foss", "dc": "dcsis"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InputError(f"unknown screening method {value!r}") from None

    @property
    def label(self) -> str:
        return {"sis": "L-SIS", "sirs": "SIRS", "dcsis": "DC-SIS", "lasso": "L-Lasso", "foss": "L-FOSS"}[self.value]


ALL_METHODS = (ScreenerId.SIRS, ScreenerId.DCSIS, ScreenerId.SIS, ScreenerId.LASSO, ScreenerId.FOSS)

_MARGINAL = {ScreenerId.SIS: sis_scores, ScreenerId.SIRS: sirs_scores, ScreenerId.DCSIS: dcsis_scores}


def screen(
    X, y, M: int, method, stream=None, *, folds: int = 10, cv: LassoCV | None = None, pad: bool = False
) -> ScreeningOutcome:
    """Run one screener and return its selected variables.

    Every method selects exactly ``M`` variables except the Lasso, which
    keeps at most ``M`` of its nonzero coefficients unless ``pad`` is set.
    FOSS is initialised from the cross-validated Lasso ranking; pass ``cv``
    to reuse a Lasso fit already computed on the same ``(X, y)``.
    """
    method = ScreenerId.parse(method)
    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    if not 0 <= M <= X.shape[1]:
        raise InputError(f"M={M} must lie in 0..p={X.shape[1]}")
    if method in _MARGINAL:
        s = _MARGINAL[method](X, y)
        return ScreeningOutcome(s, top_m(s, M), method.value)
    if M >= X.shape[0]:
        raise InputError(f"M={M} must be smaller than n={X.shape[0]}")
    if cv is None:
        cv = lasso_cv(X, y, folds, stream)
    if method is ScreenerId.LASSO:
        return lasso_outcome(X, y, cv, M, pad)
    order = lasso_ranking(X, y, cv.fit)
    out = foss_screen(X, y, M, list(order[:M] + 1), stream)
    out.info["active_size"] = len(cv.fit.active)
    return out


__all__ = [
    "ALL_METHODS",
    "LassoCV",
    "LassoFit",
    "ScreenerId",
    "dcsis_scores",
    "exhaustive_best_subset",
    "foss_screen",
    "kkt_residual",
    "lambda_grid",
    "lambda_max",
    "lasso_cv",
    "lasso_outcome",
    "lasso_path",
    "lasso_ranking",
    "lasso_screen",
    "ranked",
    "screen",
    "sirs_scores",
    "sis_scores",
    "subset_rss",
    "top_m",
]
