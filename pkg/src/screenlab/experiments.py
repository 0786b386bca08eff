"""Coverage-rate benchmarks: how often a screener's selected subset contains the truth.

Every repetition draws one design from ``spawn_rep_stream(master_seed, rep)``
and all configured methods screen that same ``(X, y)``. The Lasso
cross-validation fit is computed once per repetition and design, and shared
by L-Lasso, L-FOSS (as its starting subset) and the data-driven choice of M.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .basis import LINEAR, QUADRATIC, apply_basis, pick_stage
from .core import InputError, ScreenlabError, VariableSet
from .modelsel import select_m
from .sampling import DEFAULT_SEED, sample_uniform_design, spawn_rep_stream
from .screeners import ALL_METHODS, ScreenerId, lasso_cv, lasso_ranking, screen
from .testbed import FunctionId, TestFunction, make_function

BASIS_POLICIES = ("linear", "quadratic", "two-stage")
_STAGES = {"linear": (LINEAR,), "quadratic": (QUADRATIC,), "two-stage": (LINEAR, QUADRATIC)}
_NEEDS_CV = (ScreenerId.LASSO, ScreenerId.FOSS)
_FIELDS = (
    "function", "n", "p", "M", "p0", "methods", "basis", "reps",
    "master_seed", "folds", "ambient_normalizer", "lasso_pad",
)


class ConfigError(InputError):
    """An experiment configuration field is missing or invalid."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")

    def __reduce__(self):
        return type(self), (self.field, str(self).split(": ", 1)[-1])


def coverage_rate(selections: Sequence[VariableSet], truth: VariableSet) -> float:
    """Fraction of ``selections`` that contain every index of ``truth``."""
    if len(selections) == 0:
        raise InputError("coverage_rate needs at least one selection")
    return sum(truth.issubset(s) for s in selections) / len(selections)


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of a coverage table.

    ``M`` is a fixed screening size or ``"auto"`` for the GCV choice made
    separately in each repetition. ``p0`` is the number of declared active
    variables and must match ``function``. ``lasso_pad`` pads L-Lasso
    selections smaller than ``M`` by marginal correlation.
    """

    function: TestFunction
    n: int
    p: int
    M: int | str
    p0: int
    methods: tuple[ScreenerId, ...] = ALL_METHODS
    basis: str = "linear"
    reps: int = 200
    master_seed: int = DEFAULT_SEED
    folds: int = 10
    lasso_pad: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(ScreenerId.parse(m) for m in self.methods))
        for name in ("n", "p", "p0", "reps", "folds", "master_seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(name, f"expected an integer, got {v!r}")
        if self.reps < 1:
            raise ConfigError("reps", "must be at least 1")
        if self.n < 4:
            raise ConfigError("n", "must be at least 4")
        if self.function.p != self.p:
            raise ConfigError("p", f"function has dimension {self.function.p}, config says {self.p}")
        if self.function.p0 != self.p0:
            raise ConfigError("p0", f"function has p0={self.function.p0}, config says {self.p0}")
        if not self.methods:
            raise ConfigError("methods", "at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods", "duplicate method")
        if self.basis not in BASIS_POLICIES:
            raise ConfigError("basis", f"must be one of {', '.join(BASIS_POLICIES)}")
        if not 2 <= self.folds <= self.n:
            raise ConfigError("folds", "must lie in 2..n")
        if self.M == "auto":
            return
        if isinstance(self.M, bool) or not isinstance(self.M, (int, np.integer)):
            raise ConfigError("M", f"expected an integer or 'auto', got {self.M!r}")
        if not self.p0 <= self.M < self.n:
            raise ConfigError("M", f"need p0 <= M < n, got M={self.M}")
        if self.M > self.p:
            raise ConfigError("M", f"cannot exceed p={self.p}")

    @property
    def truth(self) -> VariableSet:
        return self.function.truth

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Build from flat key-value pairs (as read from a TOML file).

        ``function`` is a name; ``p0`` and ``p`` size it. ``methods`` may be a
        list of names or ``"all"``. ``ambient_normalizer`` is passed to the
        test function.
        """
        for key in data:
            if key not in _FIELDS:
                raise ConfigError(key, "unknown field")
        for key in ("function", "n", "p", "M", "p0"):
            if key not in data:
                raise ConfigError(key, "required field is missing")
        try:
            fid = FunctionId(data["function"])
        except ValueError:
            raise ConfigError("function", f"unknown test function {data['function']!r}") from None
        for key in ("n", "p", "p0"):
            if isinstance(data[key], bool) or not isinstance(data[key], int):
                raise ConfigError(key, f"expected an integer, got {data[key]!r}")
        try:
            tf = make_function(
                fid.value, data["p0"], data["p"], ambient_normalizer=bool(data.get("ambient_normalizer", False))
            )
        except InputError as e:
            raise ConfigError("function", str(e)) from None
        methods = data.get("methods", "all")
        if methods == "all":
            methods = ALL_METHODS
        elif isinstance(methods, str):
            methods = [methods]
        try:
            methods = tuple(ScreenerId.parse(m) for m in methods)
        except InputError as e:
            raise ConfigError("methods", str(e)) from None
        return cls(
            tf,
            data["n"],
            data["p"],
            data["M"],
            data["p0"],
            methods,
            data.get("basis", "linear"),
            data.get("reps", 200),
            data.get("master_seed", DEFAULT_SEED),
            data.get("folds", 10),
            bool(data.get("lasso_pad", False)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "function": self.function.id.value,
            "n": int(self.n),
            "p": int(self.p),
            "M": self.M if self.M == "auto" else int(self.M),
            "p0": int(self.p0),
            "methods": [m.value for m in self.methods],
            "basis": self.basis,
            "reps": int(self.reps),
            "master_seed": int(self.master_seed),
            "folds": int(self.folds),
            "ambient_normalizer": self.function.ambient_normalizer,
            "lasso_pad": self.lasso_pad,
        }


@dataclass(frozen=True)
class RepResult:
    rep: int
    data_hash: str
    M: int
    active_size: int | None
    selected: dict[str, tuple[int, ...]]
    basis: dict[str, str]


def data_hash(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(y, dtype=np.float64).tobytes())
    return h.hexdigest()


def run_repetition(cfg: ExperimentConfig, rep: int) -> RepResult:
    """Draw repetition ``rep``'s data and screen it with every configured method."""
    stream = spawn_rep_stream(cfg.master_seed, rep)
    X = np.asarray(sample_uniform_design(cfg.n, cfg.p, stream))
    y = cfg.function(X)
    digest = data_hash(X, y)
    stages = [(b, apply_basis(X, b)) for b in _STAGES[cfg.basis]]
    need_cv = cfg.M == "auto" or any(m in _NEEDS_CV for m in cfg.methods)
    cvs = [lasso_cv(Xb, y, cfg.folds, stream) if need_cv else None for _, Xb in stages]
    active = None if cvs[0] is None else len(cvs[0].fit.active)
    if cfg.M == "auto":
        # GCV search on the first stage's design, seeded by its Lasso ranking
        Xb = stages[0][1]
        order = lasso_ranking(Xb, y, cvs[0].fit)
        M = select_m(Xb, y, max(active, 1), init_order=order + 1)
    else:
        M = int(cfg.M)
    selected, basis = {}, {}
    for method in cfg.methods:
        outs = [
            (b, Xb, screen(Xb, y, M, method, stream, folds=cfg.folds, cv=cv, pad=cfg.lasso_pad))
            for (b, Xb), cv in zip(stages, cvs)
        ]
        out = outs[0][2] if len(outs) == 1 else pick_stage(outs, y)
        selected[method.value] = out.selected.indices
        basis[method.value] = outs[0][0].tag if len(outs) == 1 else out.basis
    return RepResult(rep, digest, M, active, selected, basis)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Aggregated outcome of ``run_coverage_experiment``.

    ``inclusion[method][j - 1]`` is the fraction of repetitions whose
    selection contains variable ``j``. ``wall_time`` is the only field that
    varies between identical runs.
    """

    config: dict[str, Any]
    truth: tuple[int, ...]
    coverage: dict[str, float]
    inclusion: dict[str, list[float]]
    reps: int
    wall_time: float
    selected_m: list[int]
    active_sizes: list[int | None]
    data_hashes: list[str]
    winning_basis: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def methods(self) -> list[str]:
        return list(self.coverage)

    def truth_inclusion(self, method: str) -> dict[int, float]:
        return {j: self.inclusion[method][j - 1] for j in self.truth}

    def to_dict(self) -> dict[str, Any]:
        m = np.asarray(self.selected_m, dtype=np.float64)
        return {
            "config": self.config,
            "truth": list(self.truth),
            "reps": self.reps,
            "wall_time_seconds": self.wall_time,
            "coverage": dict(self.coverage),
            "inclusion": {k: list(v) for k, v in self.inclusion.items()},
            "truth_inclusion": {k: {str(j): r for j, r in self.truth_inclusion(k).items()} for k in self.coverage},
            "selected_m": {
                "values": list(self.selected_m),
                "mean": float(m.mean()),
                "sd": float(m.std(ddof=1)) if m.size > 1 else 0.0,
            },
            "lasso_active_sizes": list(self.active_sizes),
            "winning_basis": self.winning_basis,
            "data_hashes": list(self.data_hashes),
        }

    def to_csv(self) -> str:
        """One row per method; deterministic for a fixed configuration."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["method", "label", "coverage", "reps", "mean_m"] + [f"incl_x{j}" for j in self.truth])
        mean_m = float(np.mean(self.selected_m))
        for k, c in self.coverage.items():
            row = [k, ScreenerId(k).label, f"{c:.17g}", self.reps, f"{mean_m:.17g}"]
            row += [f"{r:.17g}" for r in self.truth_inclusion(k).values()]
            w.writerow(row)
        return buf.getvalue()

    def table(self) -> str:
        """Plain-text coverage table: methods as rows, one column for this configuration."""
        cfg = self.config
        head = f"n={cfg['n']},p={cfg['p']},M={cfg['M']}"
        sub = f"p0={cfg['p0']}"
        width = max(len(head), len(sub), 7)
        lines = [
            f"function {cfg['function']} ({cfg['basis']} basis, {self.reps} reps)",
            f"{'':<8} {head:>{width}}",
            f"{'':<8} {sub:>{width}}",
        ]
        for k, c in self.coverage.items():
            lines.append(f"{ScreenerId(k).label:<8} {c:>{width}.3f}")
        return "\n".join(lines) + "\n"


def _tagged(exc: BaseException, rep: int) -> BaseException:
    exc.rep = rep
    return exc


def _results(cfg: ExperimentConfig, workers: int) -> Iterable[RepResult]:
    if workers <= 1 or cfg.reps == 1:
        for r in range(cfg.reps):
            try:
                yield run_repetition(cfg, r)
            except ScreenlabError as e:
                raise _tagged(e, r)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_repetition, cfg, r) for r in range(cfg.reps)]
        try:
            for r, fut in enumerate(futures):
                try:
                    yield fut.result()
                except ScreenlabError as e:
                    raise _tagged(e, r)
        finally:
            for fut in futures:
                fut.cancel()


def run_coverage_experiment(cfg: ExperimentConfig, workers: int = 1, progress=None) -> CoverageReport:
    """Run ``cfg.reps`` independent repetitions and aggregate coverage.

    Results are reduced in repetition order, so the report (apart from
    ``wall_time``) does not depend on ``workers``. A failing repetition
    aborts the run; the raised error carries the repetition index in its
    ``rep`` attribute.
    """
    start = time.perf_counter()
    truth = cfg.truth
    rows: list[RepResult] = []
    for res in _results(cfg, workers):
        rows.append(res)
        if progress is not None:
            progress(res)
    coverage, inclusion, winners = {}, {}, {}
    for m in cfg.methods:
        sels = [VariableSet(r.selected[m.value]) for r in rows]
        coverage[m.value] = coverage_rate(sels, truth)
        counts = np.zeros(cfg.p)
        for s in sels:
            counts[s.zero_based()] += 1
        inclusion[m.value] = (counts / len(rows)).tolist()
        tally: dict[str, int] = {}
        for r in rows:
            tally[r.basis[m.value]] = tally.get(r.basis[m.value], 0) + 1
        winners[m.value] = tally
    return CoverageReport(
        cfg.to_dict(),
        truth.indices,
        coverage,
        inclusion,
        len(rows),
        time.perf_counter() - start,
        [r.M for r in rows],
        [r.active_size for r in rows],
        [r.data_hash for r in rows],
        winners,
    )


def write_reports(report: CoverageReport, out_dir: str, stem: str = "coverage") -> tuple[str, str]:
    """Write ``<stem>.csv`` and ``<stem>.json`` under ``out_dir``; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    return csv_path, json_path
