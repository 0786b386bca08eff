"""Simulators used in the coverage benchmarks.

Only the first ``p0`` coordinates (or the eight borehole inputs) enter each
formula; any further coordinates are inert noise inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .bla import IntegrableFunction
from .core import DimensionMismatch, DimensionTooSmall, InputError, VariableSet


class FunctionId(str, Enum):
    SPHERE = "sphere"
    ACKLEY = "ackley"
    YANG = "yang"
    BOREHOLE = "borehole"
    INTERACTION = "interaction"
    QUAD1D = "quad1d"


# physical ranges of (r_w, r, T_u, H_u, T_l, H_l, L, K_w)
BOREHOLE_LOWER = np.array([0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 1500.0])
BOREHOLE_UPPER = np.array([0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 15000.0])
BOREHOLE_NAMES = ("r_w", "r", "T_u", "H_u", "T_l", "H_l", "L", "K_w")

# declared active inputs of the borehole, keyed by how many are declared
BOREHOLE_TRUTH = {2: (1, 8), 5: (1, 4, 6, 7, 8), 8: tuple(range(1, 9))}

_FIXED_P0 = {FunctionId.INTERACTION: 2, FunctionId.QUAD1D: 1}


@dataclass(frozen=True)
class TestFunction:
    """A benchmark simulator on ``[0, 1)^p``.

    For the borehole, ``p0`` chooses which inputs count as active when
    computing coverage (2, 5 or all 8); the formula always uses all eight.
    ``ambient_normalizer`` switches the Ackley ``1/p0`` factors to ``1/p``.
    """

    __test__ = False  # not a pytest class

    id: FunctionId
    p0: int
    p: int
    ambient_normalizer: bool = False

    def __post_init__(self) -> None:
        fid = FunctionId(self.id)
        object.__setattr__(self, "id", fid)
        if fid in _FIXED_P0 and self.p0 != _FIXED_P0[fid]:
            raise InputError(f"{fid.value} has exactly {_FIXED_P0[fid]} active variables")
        if fid is FunctionId.BOREHOLE:
            if self.p0 not in BOREHOLE_TRUTH:
                raise InputError("borehole p0 must be 2, 5 or 8")
            if self.p < 8:
                raise DimensionTooSmall("borehole needs p >= 8")
        if not 1 <= self.p0 <= self.p:
            raise DimensionTooSmall(f"need 1 <= p0 <= p, got p0={self.p0}, p={self.p}")

    @property
    def truth(self) -> VariableSet:
        if self.id is FunctionId.BOREHOLE:
            return VariableSet(BOREHOLE_TRUTH[self.p0])
        return VariableSet.full(self.p0)

    @property
    def n_inputs(self) -> int:
        """Number of leading coordinates the formula reads."""
        return 8 if self.id is FunctionId.BOREHOLE else self.p0

    def __call__(self, X) -> np.ndarray:
        return eval_test_function(self, X)

    def as_integrable(self) -> IntegrableFunction:
        return IntegrableFunction(self.p, self)


def make_function(name: str, p0: int | None = None, p: int | None = None, **kw) -> TestFunction:
    fid = FunctionId(name)
    if p0 is None:
        p0 = _FIXED_P0.get(fid, 8 if fid is FunctionId.BOREHOLE else 5)
    if p is None:
        p = 8 if fid is FunctionId.BOREHOLE else p0
    return TestFunction(fid, p0, p, **kw)


def borehole_physical(Xphys) -> np.ndarray:
    """Flow rate (m^3/yr) at physical inputs ``(r_w, r, T_u, H_u, T_l, H_l, L, K_w)``."""
    x = np.atleast_2d(np.asarray(Xphys, dtype=np.float64))
    rw, r, Tu, Hu, Tl, Hl, L, Kw = x.T
    lg = np.log(r / rw)
    return 2.0 * np.pi * Tu * (Hu - Hl) / (lg * (1.0 + 2.0 * L * Tu / (lg * rw * rw * Kw) + Tu / Tl))


def eval_borehole(U) -> np.ndarray:
    """Borehole output with inputs given on ``[0, 1)^8`` and mapped affinely to their ranges."""
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    if U.shape[1] != 8:
        raise DimensionMismatch(f"borehole takes 8 inputs, got {U.shape[1]}")
    return borehole_physical(BOREHOLE_LOWER + U * (BOREHOLE_UPPER - BOREHOLE_LOWER))


def eval_test_function(tf: TestFunction, x) -> np.ndarray:
    """Evaluate ``tf`` at one point (length ``p``) or at each row of an ``(N, p)`` array."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != tf.p:
        raise DimensionMismatch(f"{tf.id.value} expects dimension {tf.p}, got {X.shape[1]}")
    k = tf.p0
    Xa = X[:, :k]
    fid = tf.id
    if fid is FunctionId.SPHERE:
        out = (Xa * Xa) @ np.arange(1, k + 1, dtype=np.float64)
    elif fid is FunctionId.ACKLEY:
        d = tf.p if tf.ambient_normalizer else k
        out = (
            -20.0 * np.exp(-0.2 * np.sqrt(np.sum(Xa * Xa, axis=1) / d))
            - np.exp(np.sum(2.0 * np.pi * Xa, axis=1) / d)
            + 20.0
            + np.e
        )
    elif fid is FunctionId.YANG:
        out = Xa.sum(axis=1) * np.exp(-np.sum(np.sin(Xa * Xa), axis=1))
    elif fid is FunctionId.BOREHOLE:
        out = eval_borehole(X[:, :8])
    elif fid is FunctionId.INTERACTION:
        out = (X[:, 0] - 0.5) * (X[:, 1] - 0.5)
    else:
        out = 10.0 * (X[:, 0] - 0.5) ** 2
    return out[0] if single else out


def augment_with_noise(tf: TestFunction, p: int) -> TestFunction:
    """Same simulator in ambient dimension ``p``; extra coordinates are ignored."""
    if p < tf.n_inputs:
        raise DimensionTooSmall(f"p={p} is smaller than the {tf.n_inputs} inputs the function reads")
    return replace(tf, p=p)
