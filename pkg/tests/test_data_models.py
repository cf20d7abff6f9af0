"""Validation tests for parameters, run configs and settings."""

from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from ringcore.config import Settings
from ringcore.data_models import BackendKind, ClusteringParams, EvalReport, RunConfig


def test_params_defaults() -> None:
    params = ClusteringParams(k=3)
    assert (params.z, params.eps, params.delta, params.seed) == (1.0, 0.2, 0.01, 0)


@pytest.mark.parametrize(
    "fields",
    [
        {"k": 0},
        {"k": 2, "z": 0.5},
        {"k": 2, "eps": 0.0},
        {"k": 2, "eps": 1.0},
        {"k": 2, "delta": 1.5},
        {"k": 2, "seed": -1},
        {"k": 2, "z": math.inf},
    ],
)
def test_params_reject_out_of_range(fields: dict) -> None:
    with pytest.raises(ValidationError):
        ClusteringParams(**fields)


def test_params_are_frozen() -> None:
    params = ClusteringParams(k=2)
    with pytest.raises(ValidationError):
        params.k = 3


def test_run_config_rejects_unknown_modes() -> None:
    params = ClusteringParams(k=2)
    with pytest.raises(ValidationError):
        RunConfig(subcommand="eval", params=params, constraint_mode="sometimes")
    with pytest.raises(ValidationError):
        RunConfig(subcommand="bench", params=params, profile="spirals")


def test_fair_builds_need_euclidean_input() -> None:
    with pytest.raises(ValidationError):
        RunConfig(subcommand="build", params=ClusteringParams(k=2), fair=True, backend=BackendKind.GRAPH)


def test_input_keeps_urls_intact() -> None:
    config = RunConfig(subcommand="build", params=ClusteringParams(k=2), input="https://example.org/p.csv")
    assert config.input == "https://example.org/p.csv"


def test_alpha_defaults_follow_z() -> None:
    assert Settings().alpha_for(1.0) == 16.0
    assert Settings().alpha_for(2.0) == 64.0
    assert Settings(alpha_budget=1.5).alpha_for(2.0) == 1.5


def test_settings_read_environment(monkeypatch) -> None:
    monkeypatch.setenv("RINGCORE_THREADS", "3")
    monkeypatch.setenv("RINGCORE_BUDGET_C1", "0.5")
    cfg = Settings()
    assert cfg.threads == 3
    assert cfg.budget_c1 == 0.5


def _report(failures: int, parts: dict | None = None) -> EvalReport:
    return EvalReport(
        trials=[],
        threshold=0.2,
        max_relative_error=0.0,
        mean_relative_error=0.0,
        quantiles={},
        max_additive_error=0.0,
        failure_count=failures,
        parts=parts or {},
    )


def test_failing_part_fails_the_report() -> None:
    assert _report(0).passed
    assert not _report(0, {"a": _report(0), "b": _report(2)}).passed
    assert _report(0, {"a": _report(0)}).passed


def test_plan_out_requires_constraint(tmp_path) -> None:
    params = ClusteringParams(k=2)
    with pytest.raises(ValidationError):
        RunConfig(subcommand="eval", params=params, plan_out=tmp_path / "plan.csv")
    config = RunConfig(subcommand="eval", params=params, constraint="gamma.json", plan_out=tmp_path / "plan.csv")
    assert config.constraint == "gamma.json"
