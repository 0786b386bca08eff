"""Command-line front end.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources
from typing import Any, Sequence

import numpy as np

from .basis import LINEAR, QUADRATIC, apply_basis, pick_stage
from .bla import bla_closed_form
from .core import InputError, NumericError, validate_design
from .diagnostics import star_discrepancy, sobol_first_order
from .experiments import BASIS_POLICIES, ExperimentConfig, run_coverage_experiment, write_reports
from .modelsel import argmin_gcv, gcv_curve, search_interval
from .sampling import SeededStream, resolve_seed, sample_uniform_design, spawn_rep_stream
from .screeners import ALL_METHODS, ScreenerId, lasso_cv, lasso_ranking, screen
from .testbed import FunctionId, make_function

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
# largest double below 1
ONE_MINUS = 1.0 - 2.0**-52


class ParseError(InputError):
    """A dataset or point file could not be parsed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")

    def __reduce__(self):
        return type(self), (self.line, str(self).split(": ", 1)[-1])


def fmt(x: float) -> str:
    return "%.17g" % x


def read_table(path: str) -> tuple[list[str], np.ndarray]:
    """Header plus numeric body of an RFC-4180 CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(1, "empty file")
    header = [h.strip() for h in rows[0]]
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(lineno, f"expected {len(header)} fields, found {len(row)}")
        try:
            body.append([float(v) for v in row])
        except ValueError:
            raise ParseError(lineno, "non-numeric field") from None
    if not body:
        raise ParseError(2, "no data rows")
    return header, np.array(body, dtype=np.float64)


def read_dataset(path: str, response: str = "y", clip_eps: float | None = None):
    """Design matrix, response and predictor names from a CSV dataset."""
    header, data = read_table(path)
    if response not in header:
        raise InputError(f"response column {response!r} not found in {path}")
    k = header.index(response)
    y = data[:, k]
    X = np.delete(data, k, axis=1)
    names = [h for i, h in enumerate(header) if i != k]
    if X.shape[1] == 0:
        raise InputError("dataset has no predictor columns")
    if not np.all(np.isfinite(data)):
        raise InputError("dataset contains non-finite values")
    if clip_eps is not None:
        X = X.copy()
        X[(X >= 1.0) & (X <= 1.0 + clip_eps)] = ONE_MINUS
        X[(X < 0.0) & (X >= -clip_eps)] = 0.0
    return np.asarray(validate_design(X)), y, names


def write_dataset(path: str, X: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow([f"x{j + 1}" for j in range(X.shape[1])] + ["y"])
        for row, v in zip(X, y):
            w.writerow([fmt(x) for x in row] + [fmt(v)])


def _emit(payload: dict[str, Any], out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _methods(value: str) -> tuple[ScreenerId, ...]:
    return ALL_METHODS if value == "all" else (ScreenerId.parse(value),)


def _parse_m(value: str):
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--m takes an integer or 'auto'") from None


def cmd_screen(args) -> int:
    X, y, names = read_dataset(args.dataset, args.response, args.clip_eps)
    n, p = X.shape
    seed = resolve_seed(args.seed)
    stream = SeededStream(seed, 0)
    methods = _methods(args.method)
    bases = {"linear": (LINEAR,), "quadratic": (QUADRATIC,), "two-stage": (LINEAR, QUADRATIC)}[args.basis]
    designs = [(b, apply_basis(X, b)) for b in bases]
    need_cv = args.m == "auto" or any(m in (ScreenerId.LASSO, ScreenerId.FOSS) for m in methods)
    cvs = [lasso_cv(Xb, y, args.folds, stream) if need_cv else None for _, Xb in designs]
    report: dict[str, Any] = {
        "dataset": os.path.basename(args.dataset),
        "n": n,
        "p": p,
        "response": args.response,
        "seed": seed,
        "basis_policy": args.basis,
    }
    if args.m == "auto":
        Xb = designs[0][1]
        order = lasso_ranking(Xb, y, cvs[0].fit) + 1
        m0 = max(len(cvs[0].fit.active), 1)
        curve = gcv_curve(Xb, y, m0, init_order=order)
        M = argmin_gcv(curve, float(np.sum((y - y.mean()) ** 2)) / n)
        lo, hi = search_interval(n, min(m0, n - 1), p)
        report.update(
            M="auto",
            selected_m=M,
            gcv=curve[M],
            gcv_interval=[lo, hi],
            gcv_curve={str(k): v for k, v in curve.items()},
        )
    else:
        M = args.m
        if not 1 <= M <= p:
            raise InputError(f"--m must lie in 1..p={p}, got {M}")
        report["M"] = M
    outcomes = []
    for method in methods:
        stages = [
            (b, Xb, screen(Xb, y, M, method, stream, folds=args.folds, cv=cv, pad=args.lasso_pad))
            for (b, Xb), cv in zip(designs, cvs)
        ]
        out = stages[0][2] if len(stages) == 1 else pick_stage(stages, y)
        d = out.to_dict()
        if len(stages) == 1:
            d["basis"] = stages[0][0].tag
        d.pop("ranking", None)
        d["selected_names"] = [names[j - 1] for j in d["selected"]]
        outcomes.append(d)
    report["outcomes"] = outcomes
    _emit(report, args.out)
    return EXIT_OK


def resolve_config(name: str) -> str:
    """A config path, or the name of a bundled config (with or without ``.toml``)."""
    if os.path.exists(name):
        return name
    stem = name[:-5] if name.endswith(".toml") else name
    res = resources.files("screenlab") / "configs" / f"{stem}.toml"
    if res.is_file():
        return str(res)
    raise InputError(f"config {name!r} not found (bundled: {', '.join(bundled_configs())})")


def bundled_configs() -> list[str]:
    root = resources.files("screenlab") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_config(path: str, overrides: dict[str, Any]) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise InputError(f"{path}: {e}") from None
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(data)


def cmd_bench(args) -> int:
    path = resolve_config(args.config)
    seed = args.seed if args.seed is not None else os.environ.get("SCREENLAB_SEED")
    cfg = load_config(path, {"reps": args.reps, "master_seed": None if seed is None else int(seed)})
    workers = args.workers or os.cpu_count() or 1
    report = run_coverage_experiment(cfg, workers=workers)
    stem = os.path.splitext(os.path.basename(path))[0]
    if args.out:
        write_reports(report, args.out, stem)
    sys.stdout.write(report.table())
    return EXIT_OK


def cmd_generate(args) -> int:
    tf = make_function(args.function, args.p0, args.p, ambient_normalizer=args.ambient_normalizer)
    seed = resolve_seed(args.seed)
    X = np.asarray(sample_uniform_design(args.n, tf.p, spawn_rep_stream(seed, 0)))
    write_dataset(args.out, X, tf(X))
    return EXIT_OK


def cmd_bla(args) -> int:
    tf = make_function(args.function, args.p0, args.p, ambient_normalizer=args.ambient_normalizer)
    res = bla_closed_form(tf.as_integrable(), args.n_quad)
    d = res.to_dict()
    d.update(function=tf.id.value, p0=tf.p0, p=tf.p, truth=list(tf.truth.indices), margin=res.margin(tf.truth))
    _emit(d, args.out)
    return EXIT_OK


def cmd_discrepancy(args) -> int:
    _, P = read_table(args.points)
    _emit({"m": int(P.shape[0]), "d": int(P.shape[1]), "star_discrepancy": star_discrepancy(P)}, args.out)
    return EXIT_OK


def cmd_sobol(args) -> int:
    tf = make_function(args.function, args.p0, args.p, ambient_normalizer=args.ambient_normalizer)
    seed = resolve_seed(args.seed)
    S = sobol_first_order(tf, args.N, SeededStream(seed, 0))
    _emit(
        {"function": tf.id.value, "p0": tf.p0, "p": tf.p, "N": args.N, "seed": seed, "first_order": S.tolist()},
        args.out,
    )
    return EXIT_OK


def _function_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--function", required=True, choices=[f.value for f in FunctionId])
    sp.add_argument("--p0", type=int, default=None, help="number of active variables")
    sp.add_argument("--p", type=int, default=None, help="ambient dimension")
    sp.add_argument("--ambient-normalizer", action="store_true", help="Ackley/Yang sums normalised by p instead of p0")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="screenlab", description="Variable screening for computer experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("screen", help="screen a CSV dataset")
    sp.add_argument("dataset")
    sp.add_argument("--method", default="foss", choices=[m.value for m in ScreenerId] + ["all"])
    sp.add_argument("--m", type=_parse_m, default="auto", help="screening size or 'auto' (GCV)")
    sp.add_argument("--basis", default="linear", choices=BASIS_POLICIES)
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--response", default="y")
    sp.add_argument("--clip-eps", type=float, default=None, help="map entries within eps outside [0,1) onto it")
    sp.add_argument("--lasso-pad", action="store_true", help="pad L-Lasso selections to M by marginal correlation")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None, help="JSON output file (default: stdout)")
    sp.set_defaults(func=cmd_screen)

    sp = sub.add_parser("bench", help="run a coverage-rate benchmark")
    sp.add_argument("config", help="TOML file or bundled config name")
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    sp.add_argument("--out", default=None, help="directory for CSV and JSON reports")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("generate", help="write a simulated dataset as CSV")
    _function_args(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("bla", help="best linear approximation of a test function")
    _function_args(sp)
    sp.add_argument("--n-quad", type=int, default=2**16)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_bla)

    sp = sub.add_parser("discrepancy", help="exact star discrepancy of a small point set")
    sp.add_argument("points", help="CSV file with a header row, one point per row")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_discrepancy)

    sp = sub.add_parser("sobol", help="first-order Sobol' indices of a test function")
    _function_args(sp)
    sp.add_argument("--N", type=int, default=2**16)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_sobol)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        rep = getattr(e, "rep", None)
        print(f"error: {'' if rep is None else f'rep {rep}: '}{e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as e:
        rep = getattr(e, "rep", None)
        print(f"numeric failure: {'' if rep is None else f'rep {rep}: '}{e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
