import numpy as np
import pytest

from screenlab.experiments import ExperimentConfig, run_coverage_experiment

# criterion number -> (description, "PASS" / "FAIL")
ACCEPTANCE: dict[int, tuple[str, str]] = {}

# benchmark cells shared by the acceptance suite and slow module tests
NAMED = {
    "yang": dict(function="yang", n=100, p=200, M=30, p0=5),
    "sphere": dict(function="sphere", n=100, p=200, M=30, p0=5),
    "sphere_hard": dict(function="sphere", n=100, p=1000, M=50, p0=10),
    "borehole5": dict(function="borehole", n=200, p=500, M=30, p0=5),
    "borehole2": dict(function="borehole", n=50, p=100, M=30, p0=2),
    "quad_linear": dict(function="quad1d", n=50, p=100, M=5, p0=1, methods=["lasso", "foss"], basis="linear"),
    "quad_quadratic": dict(function="quad1d", n=50, p=100, M=5, p0=1, methods=["lasso", "foss"], basis="quadratic"),
    "quad_two_stage": dict(function="quad1d", n=50, p=100, M=5, p0=1, methods=["lasso", "foss"], basis="two-stage"),
    "borehole_auto": dict(function="borehole", n=200, p=500, M="auto", p0=5, methods=["foss"], reps=100),
}

_REPORTS: dict[tuple, object] = {}


def coverage_report(**fields):
    """Run (once per session) and cache a coverage experiment."""
    fields.setdefault("reps", 200)
    key = tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in fields.items()))
    if key not in _REPORTS:
        _REPORTS[key] = run_coverage_experiment(ExperimentConfig.from_mapping(fields))
    return _REPORTS[key]


def named_report(name):
    return coverage_report(**NAMED[name])


def record(k: int, desc: str, ok: bool, detail: str = "") -> None:
    """Store a criterion's outcome for the summary, then assert it."""
    ACCEPTANCE[k] = (f"{desc} [{detail}]" if detail else desc, "PASS" if ok else "FAIL")
    assert ok, f"criterion {k}: {desc} {detail}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        desc, status = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {status}  {desc}")
