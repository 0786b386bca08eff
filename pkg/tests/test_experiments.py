"""Coverage-rate harness."""

import json

import numpy as np
import pytest
from conftest import named_report

from screenlab.core import NoConvergence, VariableSet
from screenlab.experiments import (
    ConfigError,
    ExperimentConfig,
    coverage_rate,
    data_hash,
    run_coverage_experiment,
    write_reports,
)
from screenlab import experiments
from screenlab.sampling import sample_uniform_design, spawn_rep_stream
from screenlab.testbed import make_function

SMALL = dict(function="sphere", n=30, p=12, M=4, p0=2, reps=4, master_seed=5, folds=3)


def test_coverage_rate_examples():
    t = VariableSet((1, 2))
    assert coverage_rate([VariableSet((1, 2, 3))] * 3, t) == 1.0
    assert coverage_rate([VariableSet((1,)), VariableSet((2, 3))], t) == 0.0
    sels = [VariableSet((1, 2)), VariableSet((1, 2, 5)), VariableSet((1, 2, 3)), VariableSet((2,))]
    assert coverage_rate(sels, t) == 0.75
    with pytest.raises(ValueError):
        coverage_rate([], t)


@pytest.mark.parametrize(
    "change,field",
    [
        (dict(reps=0), "reps"),
        (dict(M=30), "M"),
        (dict(M=1), "M"),
        (dict(M=13, n=40), "M"),
        (dict(p=3), "M"),
        (dict(basis="cubic"), "basis"),
        (dict(methods=["sis", "elastic"]), "methods"),
        (dict(function="rosenbrock"), "function"),
        (dict(colour="red"), "colour"),
        (dict(folds=1), "folds"),
        (dict(n=2.5), "n"),
    ],
)
def test_config_validation_names_field(change, field):
    data = {**SMALL, **change}
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_mapping(data)
    assert exc.value.field == field
    assert str(exc.value).startswith(field)


def test_config_missing_field():
    data = dict(SMALL)
    del data["n"]
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_mapping(data)
    assert exc.value.field == "n"


def test_config_round_trip():
    cfg = ExperimentConfig.from_mapping({**SMALL, "methods": ["sis", "foss"]})
    d = cfg.to_dict()
    assert ExperimentConfig.from_mapping({k: v for k, v in d.items()}) == cfg
    assert ExperimentConfig.from_mapping({**SMALL, "M": "auto"}).M == "auto"


def test_trivially_recoverable_instance():
    rep = run_coverage_experiment(ExperimentConfig.from_mapping({**SMALL, "p0": 1, "reps": 1, "n": 60}))
    assert all(c == 1.0 for c in rep.coverage.values())


def _strip(d):
    d = dict(d)
    d.pop("wall_time_seconds")
    return d


def test_worker_count_does_not_change_report():
    cfg = ExperimentConfig.from_mapping(SMALL)
    one = run_coverage_experiment(cfg, workers=1)
    two = run_coverage_experiment(cfg, workers=2)
    assert json.dumps(_strip(one.to_dict())) == json.dumps(_strip(two.to_dict()))
    assert one.to_csv() == two.to_csv()


def test_data_hashes_identify_shared_design():
    cfg = ExperimentConfig.from_mapping(SMALL)
    rep = run_coverage_experiment(cfg)
    tf = make_function("sphere", 2, 12)
    for r, h in enumerate(rep.data_hashes):
        X = np.asarray(sample_uniform_design(30, 12, spawn_rep_stream(5, r)))
        assert h == data_hash(X, tf(X))
    assert len(set(rep.data_hashes)) == cfg.reps


def test_every_method_sees_the_same_data(monkeypatch):
    seen = []
    real = experiments.screen

    def spy(X, y, M, method, *a, **k):
        seen.append((data_hash(np.asarray(X), np.asarray(y)), method.value))
        return real(X, y, M, method, *a, **k)

    monkeypatch.setattr(experiments, "screen", spy)
    run_coverage_experiment(ExperimentConfig.from_mapping({**SMALL, "reps": 2}))
    for r in range(2):
        block = seen[5 * r : 5 * r + 5]
        assert len({h for h, _ in block}) == 1 and len({m for _, m in block}) == 5


def test_inclusion_bounds_coverage():
    rep = run_coverage_experiment(ExperimentConfig.from_mapping({**SMALL, "reps": 6}))
    for m, c in rep.coverage.items():
        assert all(v >= c for v in rep.truth_inclusion(m).values())
        assert len(rep.inclusion[m]) == 12


def test_failing_rep_aborts_with_index(monkeypatch):
    real = experiments.screen

    def flaky(X, y, M, method, stream=None, **k):
        if stream.stream_index == 2:
            raise NoConvergence(0.1)
        return real(X, y, M, method, stream, **k)

    monkeypatch.setattr(experiments, "screen", flaky)
    with pytest.raises(NoConvergence) as exc:
        run_coverage_experiment(ExperimentConfig.from_mapping(SMALL))
    assert exc.value.rep == 2


def test_reports_written(tmp_path):
    rep = run_coverage_experiment(ExperimentConfig.from_mapping({**SMALL, "reps": 2}))
    csv_path, json_path = write_reports(rep, str(tmp_path), "small")
    lines = open(csv_path, newline="").read().split("\r\n")
    assert lines[0] == "method,label,coverage,reps,mean_m,incl_x1,incl_x2"
    assert len([ln for ln in lines[1:] if ln]) == 5
    assert json.load(open(json_path))["reps"] == 2
    table = rep.table()
    for label in ("L-SIS", "SIRS", "DC-SIS", "L-Lasso", "L-FOSS"):
        assert label in table


@pytest.mark.slow
def test_sphere_method_ordering():
    rep = named_report("sphere")
    c = rep.coverage
    assert c["foss"] >= 0.96
    chain = ["foss", "lasso", "sis", "dcsis", "sirs"]
    for a, b in zip(chain, chain[1:]):
        assert c[a] >= c[b] - 0.03, (a, b, c)
