from __future__ import annotations

import pytest

from layercast import (
    ExperimentSpec,
    MetricsRow,
    SpecError,
    SweepPoint,
    fit_scaling,
    read_metrics,
    run_experiment,
    write_metrics,
)
from layercast.harness import format_metrics, validate_spec


def row(protocol="x", n=8, d=4, k=1, c=0, seed=0, rounds=10, success=True, notes=""):
    return MetricsRow(protocol, n, d, k, c, seed, rounds, success, notes)


def test_empty_sweep_gives_header_only_csv(tmp_path):
    spec = ExperimentSpec("crbc", [], [], {}, str(tmp_path / "out.csv"))
    rows = run_experiment(spec)
    assert rows == []
    text = (tmp_path / "out.csv").read_text()
    assert text.strip() == "protocol,n,D,k,C,seed,rounds,success,notes"


def test_crbc_paths_sweep_all_success():
    spec = ExperimentSpec(
        "crbc",
        [SweepPoint("path", {"n": n}) for n in (16, 32, 64)],
        list(range(10)),
        {"c1": 8, "c2": 8},
    )
    rows = run_experiment(spec)
    assert len(rows) == 30
    assert all(r.success for r in rows)
    assert {r.n for r in rows} == {16, 32, 64}


def test_unknown_constant_rejected_before_running():
    spec = ExperimentSpec("crbc", [SweepPoint("path", {"n": 4})], [0], {"bogus": 1})
    with pytest.raises(SpecError, match="bogus"):
        run_experiment(spec)


def test_unknown_protocol_rejected():
    with pytest.raises(SpecError):
        validate_spec(ExperimentSpec("teleport", [], [], {}))


def test_csv_roundtrip(tmp_path):
    rows = [
        row(seed=1, rounds=42),
        row(protocol="gossip", n=64, d=9, k=64, c=5, seed=2, rounds=9000, success=False, notes="gather: x, y"),
    ]
    path = tmp_path / "m.csv"
    write_metrics(rows, path)
    assert read_metrics(path) == rows


def test_fit_exact_linear_model():
    rows = [row(n=n, rounds=2 * n) for n in (8, 16, 32)]
    fit = fit_scaling(rows, "n")
    assert fit.constant == pytest.approx(2.0)
    assert fit.max_ratio == pytest.approx(1.0)


def test_fit_requires_two_distinct_points():
    rows = [row(seed=s) for s in range(5)]
    with pytest.raises(SpecError, match="distinct"):
        fit_scaling(rows, "n")


def test_fit_rejects_degenerate_model():
    rows = [row(n=8), row(n=16)]
    with pytest.raises(SpecError, match="zero"):
        fit_scaling(rows, "n - n")


def test_fit_model_vocabulary():
    rows = [row(n=256, d=16, k=4, rounds=100), row(n=1024, d=64, k=8, rounds=400)]
    fit = fit_scaling(rows, "D*lognD + logn**2 + k")
    assert fit.constant > 0


def test_spec_json_loading(tmp_path):
    text = """{
      "protocol": "crbc",
      "sweep": [{"family": "path", "params": {"n": 8}, "graph_seed": 3}],
      "seeds": [1, 2],
      "constants": {"c1": 8},
      "output": null
    }"""
    spec = ExperimentSpec.from_json(text)
    assert spec.protocol == "crbc"
    assert spec.sweep[0].graph_seed == 3
    rows = run_experiment(spec)
    assert len(rows) == 2


def test_failures_are_recorded_not_dropped():
    # A gnp point that cannot connect raises inside the runner; the row
    # records the failure.
    spec = ExperimentSpec("gather", [SweepPoint("path", {"n": 4})], [0], {"k": 2, "wave_cap": 0})
    rows = run_experiment(spec)
    assert len(rows) == 1


def test_format_metrics_is_deterministic():
    rows = [row(seed=s) for s in range(3)]
    assert format_metrics(rows) == format_metrics(rows)
