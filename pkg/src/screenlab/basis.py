"""Coordinate-wise basis transforms and the two-stage screening combiner."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bla import IntegrableFunction, QMC_POINTS, integrate_moments, ls_fit, quadrature
from .core import (
    InputError,
    NonFiniteBasisValue,
    ScreeningOutcome,
    as_matrix,
    as_vector,
)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class BasisKind:
    """A scalar map ``b`` applied to every design entry.

    ``fn`` is ``None`` for the two built-ins, whose formulas are fixed.
    """

    tag: str
    fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.tag == "linear":
            return x
        if self.tag == "quadratic":
            return -4.0 * x * x + 4.0 * x - 2.0 / 3.0
        return np.asarray(self.fn(x), dtype=np.float64)

    def mean(self) -> float:
        """``int_0^1 b(t) dt``: exact for the built-ins, midpoint rule otherwise."""
        if self.tag == "linear":
            return 0.5
        if self.tag == "quadratic":
            return 0.0
        t = (np.arange(1 << 16) + 0.5) / (1 << 16)
        return float(np.mean(self(t)))

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> "BasisKind":
        return cls(name, fn)


LINEAR = BasisKind("linear")
QUADRATIC = BasisKind("quadratic")


def basis_from_name(name: str) -> BasisKind:
    try:
        return {"linear": LINEAR, "quadratic": QUADRATIC}[name]
    except KeyError:
        raise InputError(f"unknown basis {name!r}") from None


def apply_basis(X, b: BasisKind) -> np.ndarray:
    X = as_matrix(X)
    if b.tag == "linear":
        return X
    out = b(X)
    if out.shape != X.shape:
        raise InputError("basis must map entries elementwise")
    if not np.all(np.isfinite(out)):
        raise NonFiniteBasisValue(f"basis {b.tag!r} produced a non-finite value")
    return out


def general_bla_coefficient(
    f: IntegrableFunction, j: int, b: BasisKind = LINEAR, n_quad: int = QMC_POINTS, *, rule: str = "midpoint"
) -> float:
    """Detectability margin ``E[b(x_j) f] - E[b] E[f]`` of variable ``j`` (1-based).

    A zero margin means linear screening with basis ``b`` cannot see
    variable ``j`` no matter how much data is available.
    """
    if not 1 <= j <= f.dim:
        raise InputError(f"j={j} outside 1..{f.dim}")
    nodes, wts = quadrature(f.dim, n_quad, rule)
    col = j - 1
    mean, mom = integrate_moments(f, nodes, weight=lambda blk: b(blk[:, col : col + 1]), node_weights=wts)
    # E[b] on the same rule, so a constant f gives exactly zero
    bv = b(nodes[:, col])
    b_mean = float(np.mean(bv) if wts is None else wts @ bv)
    return float(mom[0] - b_mean * mean)


def pick_stage(stages, y) -> ScreeningOutcome:
    """Keep the stage whose selected subset fits its own design best.

    ``stages`` is a sequence of ``(basis, transformed design, outcome)``.
    Each RSS comes from ``ls_fit`` on that stage's design; near-ties (within
    ``1e-12``) go to the earlier stage. When every stage keeps all columns
    the choice is uninformative and is treated as a tie.
    """
    best = None
    stage_rss = {}
    for b, Xb, out in stages:
        r = ls_fit(Xb, y, out.selected).rss
        stage_rss[b.tag] = r
        if best is None or r < best[0] - TIE_TOL:
            best = (r, b, out)
    full = all(len(out.selected) == Xb.shape[1] for _, Xb, out in stages)
    if full:
        best = (stage_rss[stages[0][0].tag], stages[0][0], stages[0][2])
    r, b, out = best
    info = dict(out.info)
    info["rss"] = r
    info["stage_rss"] = stage_rss
    spread = max(stage_rss.values()) - min(stage_rss.values())
    info["tie_broken"] = len(stages) > 1 and (full or spread <= TIE_TOL)
    return ScreeningOutcome(out.scores, out.selected, out.method, b.tag, info)


def two_stage_screen(X, y, M: int, method, stream=None, *, bases=(LINEAR, QUADRATIC), **kwargs) -> ScreeningOutcome:
    """Screen with each basis in turn and keep the subset with the smaller RSS.

    Each stage's RSS comes from a least-squares fit on its own transformed
    design. Near-ties (within ``1e-12``) go to the first basis.
    """
    from .screeners import screen

    X = as_matrix(X)
    y = as_vector(y, X.shape[0])
    if M >= X.shape[0]:
        raise InputError(f"M={M} must be smaller than n={X.shape[0]}")
    stages = []
    for b in bases:
        Xb = apply_basis(X, b)
        stages.append((b, Xb, screen(Xb, y, M, method, stream, **kwargs)))
    return pick_stage(stages, y)
