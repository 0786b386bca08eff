"""Domain types, validation, and index-set arithmetic.

Variable indices exposed to users are 1-based (``{1, ..., p}``). Internally
numpy arrays are indexed from zero; :meth:`VariableSet.zero_based` converts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np


class ScreenlabError(Exception):
    """Base class for all library errors."""


class InputError(ScreenlabError, ValueError):
    """Bad user input (shapes, ranges, parse failures)."""


class NumericError(ScreenlabError, ArithmeticError):
    """A numerical routine could not produce a trustworthy answer."""


class OutOfRangeEntry(InputError):
    def __init__(self, i: int, j: int, value: float):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"design entry ({i}, {j}) = {value!r} is outside [0, 1)")

    def __reduce__(self):
        return type(self), (self.i, self.j, self.value)


class NonRectangular(InputError):
    pass


class InvalidShape(InputError):
    pass


class IndexExceedsDimension(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class DimensionTooSmall(InputError):
    pass


class SubsetTooLarge(InputError):
    pass


class TooManySubsets(InputError):
    pass


class TooLarge(InputError):
    pass


class NonFiniteEvaluation(NumericError):
    pass


class NonFiniteBasisValue(NumericError):
    pass


class SingularGram(NumericError):
    pass


class NoConvergence(NumericError):
    def __init__(self, lam: float, message: str = ""):
        self.lam = lam
        super().__init__(message or f"coordinate descent did not converge at lambda={lam:.6g}")

    def __reduce__(self):
        return type(self), (self.lam, str(self))


class ZeroVariance(NumericError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An ``n x p`` design with every entry in ``[0, 1)``.

    Construct through :func:`validate_design`; the stored array is read-only.
    ``np.asarray(design)`` returns the underlying values without copying.
    """

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DesignMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class ResponseVector:
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != 1:
            raise InvalidShape("response must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteEvaluation("response contains non-finite values")

    def __len__(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)


def as_response(y: Any, n: int | None = None) -> ResponseVector:
    vals = _readonly(np.array(y, dtype=np.float64))
    r = ResponseVector(vals)
    if n is not None and len(r) != n:
        raise DimensionMismatch(f"response has length {len(r)}, design has {n} rows")
    return r


@dataclass(frozen=True, order=True)
class VariableSet:
    """Sorted, duplicate-free set of 1-based variable indices."""

    indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        idx = self.indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InputError(f"indices must be strictly increasing: {idx}")
        if idx and idx[0] < 1:
            raise InputError(f"indices are 1-based, got {idx[0]}")

    @classmethod
    def of(cls, items: Iterable[int]) -> "VariableSet":
        return cls(tuple(sorted({int(i) for i in items})))

    @classmethod
    def from_zero_based(cls, items: Iterable[int]) -> "VariableSet":
        return cls.of(int(i) + 1 for i in items)

    @classmethod
    def full(cls, p: int) -> "VariableSet":
        return cls(tuple(range(1, p + 1)))

    def zero_based(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp) - 1

    def within(self, p: int) -> bool:
        return not self.indices or self.indices[-1] <= p

    def union(self, other: "VariableSet") -> "VariableSet":
        return VariableSet.of(set(self.indices) | set(other.indices))

    def difference(self, other: "VariableSet") -> "VariableSet":
        return VariableSet.of(set(self.indices) - set(other.indices))

    def issubset(self, other: "VariableSet") -> bool:
        return set(self.indices) <= set(other.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j: object) -> bool:
        return j in self.indices

    def __repr__(self) -> str:
        return "{" + ", ".join(map(str, self.indices)) + "}"


@dataclass(frozen=True, eq=False)
class SubsetModel:
    """Least-squares fit of ``y`` on an intercept plus the columns in ``subset``."""

    subset: VariableSet
    intercept: float
    coefficients: np.ndarray
    rss: float

    def __post_init__(self) -> None:
        if len(self.coefficients) != len(self.subset):
            raise InputError("coefficient count must equal subset size")
        if self.rss < 0:
            raise InputError("rss must be nonnegative")


@dataclass(frozen=True, eq=False)
class ScreeningOutcome:
    """Scores for every variable plus the selected size-``M`` subset."""

    scores: np.ndarray
    selected: VariableSet
    method: str
    basis: str = "linear"
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.selected)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "method": self.method,
            "basis": self.basis,
            "m": self.m,
            "selected": list(self.selected.indices),
            "scores": [float(s) for s in self.scores],
        }
        for k, v in self.info.items():
            d[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return d


def validate_design(raw: Any) -> DesignMatrix:
    """Check ``raw`` is a rectangular matrix of finite reals in ``[0, 1)``.

    Row lengths are checked before conversion so ragged nested lists raise
    :class:`NonRectangular` rather than a numpy error. The input is not
    modified; the returned matrix holds its own read-only copy.
    """
    if isinstance(raw, DesignMatrix):
        return raw
    if not isinstance(raw, np.ndarray):
        rows = list(raw)
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise NonRectangular(f"rows have differing lengths {sorted(lengths)}")
    arr = np.array(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise NonRectangular(f"design must be two-dimensional, got ndim={arr.ndim}")
    bad = ~np.isfinite(arr) | (arr < 0.0) | (arr >= 1.0)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise OutOfRangeEntry(int(i) + 1, int(j) + 1, float(arr[i, j]))
    return DesignMatrix(_readonly(arr))


def expand_to_full(model: SubsetModel, p: int) -> np.ndarray:
    """Place the subset coefficients into a length-``p`` vector of zeros."""
    if not model.subset.within(p):
        raise IndexExceedsDimension(
            f"subset index {model.subset.indices[-1]} exceeds dimension {p}"
        )
    out = np.zeros(p)
    out[model.subset.zero_based()] = model.coefficients
    return out


def as_matrix(X: Any) -> np.ndarray:
    """Float64 2-D view of a design; no range check."""
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidShape(f"expected a 2-D design, got ndim={a.ndim}")
    return a


def as_vector(y: Any, n: int | None = None) -> np.ndarray:
    v = np.asarray(y, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidShape("response must be one-dimensional")
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(f"response has length {v.shape[0]}, design has {n} rows")
    return v


def as_variable_set(A: VariableSet | Sequence[int] | None) -> VariableSet:
    if A is None:
        return VariableSet()
    if isinstance(A, VariableSet):
        return A
    return VariableSet.of(A)
