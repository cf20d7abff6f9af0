"""High-level orchestration helpers behind the CLI subcommands."""

from __future__ import annotations

import time
from pathlib import Path
from typing import Any

import pandas as pd

from .assignment import solve_transport, write_plan_csv
from .bicriteria import bicriteria_approx, cluster_partition
from .composer import CoresetResult, build_barycenter_coreset, build_coreset, build_fair_coreset
from .config import Settings, resolve_settings
from .data_loader import (
    coreset_frame,
    load_constraint,
    load_coreset,
    load_curves,
    load_euclidean_csv,
    load_graph,
    load_tuples,
    write_csv,
    write_json,
)
from .data_models import BackendKind, ClusteringParams, CoresetMode, EvalReport, RunConfig
from .exceptions import ConfigurationError, MissingLabelsError
from .logging_utils import configure_logging
from .metric_core import (
    EuclideanBackend,
    FrechetBackend,
    GraphBackend,
    WassersteinBackend,
    WeightedPointSet,
    cost_z,
)
from .oracle import eval_fair_parts, eval_harness
from .ring_decomp import count_bounds, count_bounds_k1, decompose, reduce_k1, reduction_params
from .synthetic import gaussian_mixture, random_curves, random_graph, random_tuples, ring_stress

LOGGER = configure_logging(__name__)

BENCH_EVAL_TRIALS = 20


def settings_for(config: RunConfig, settings: Settings | None = None) -> Settings:
    """Copy of the process settings with this run's overrides applied."""

    base = resolve_settings(settings)
    overrides: dict[str, Any] = {
        "budget_c0": config.budget_c0,
        "budget_c1": config.budget_c1,
        "budget_form": None if config.budget_form is None else config.budget_form.value,
        "alpha_budget": config.alpha_budget,
        "threads": config.threads,
        "eval_trials": config.trials,
        "eval_threshold": config.threshold,
    }
    return base.model_copy(update={k: v for k, v in overrides.items() if v is not None})


def load_dataset(config: RunConfig, settings: Settings | None = None) -> WeightedPointSet:
    if config.input is None:
        raise ConfigurationError(f"{config.subcommand} needs --input")
    if config.backend is BackendKind.EUCLIDEAN:
        return load_euclidean_csv(config.input, settings)
    if config.backend is BackendKind.GRAPH:
        return load_graph(config.input, config.points, settings)
    if config.backend is BackendKind.WASSERSTEIN:
        return load_tuples(config.input, config.p, config.ell, settings)
    return load_curves(config.input, config.m_cap, settings)


def build(P: WeightedPointSet, params: ClusteringParams, mode: CoresetMode, fair: bool, cfg: Settings) -> CoresetResult:
    """Route to the fair, barycenter or general builder."""

    if fair:
        if P.group_labels is None:
            raise MissingLabelsError("--fair needs a 'groups' column in the input")
        return build_fair_coreset(P, params, cfg)
    if isinstance(P.backend, WassersteinBackend) and params.k == 1:
        return build_barycenter_coreset(P, params, cfg)
    return build_coreset(P, params, mode, cfg)


def _output_path(config: RunConfig, cfg: Settings, default: str) -> Path:
    return config.output if config.output is not None else cfg.out_dir / default


def run_build(config: RunConfig, settings: Settings | None = None) -> CoresetResult:
    cfg = settings_for(config, settings)
    P = load_dataset(config, cfg)
    result = build(P, config.params, config.mode, config.fair, cfg)
    target = write_json(result.to_payload(), _output_path(config, cfg, "coreset.json"))
    if config.csv:
        write_csv(coreset_frame(result.points, [str(p) for p in result.provenance]), target.with_suffix(".csv"))
    return result


def run_eval(config: RunConfig, settings: Settings | None = None) -> EvalReport:
    cfg = settings_for(config, settings)
    if config.coreset is None:
        raise ConfigurationError("eval needs --coreset")
    P = load_dataset(config, cfg)
    S, payload = load_coreset(config.coreset, P, cfg)
    reference = 0.0
    if payload.get("builder") == "barycenter":
        # k = 1 reductions carry an additive (eps, cost(P, c)) guarantee.
        reference = cost_z(P, payload["centers"], config.params.z)
    fixed = [] if config.constraint is None else [load_constraint(config.constraint, cfg)]
    report = eval_harness(
        P,
        S,
        config.params,
        constraint_mode=config.constraint_mode,
        additive_reference=reference,
        settings=cfg,
        fixed_constraints=fixed,
    )
    if config.plan_out is not None:
        (gamma,) = fixed
        write_plan_csv(solve_transport(P, gamma.centers, gamma, config.params.z, cfg), config.plan_out)
    if payload.get("builder") == "fair":
        if P.group_labels is None:
            raise MissingLabelsError("evaluating a fair coreset needs a 'groups' column in the input")
        parts = eval_fair_parts(P, S, config.params, settings=cfg)
        report = report.model_copy(update={"parts": parts})
    write_json(report.model_dump(), _output_path(config, cfg, "eval.json"))
    return report


def run_inspect(config: RunConfig, settings: Settings | None = None) -> dict[str, Any]:
    """Ring decomposition of every bicriteria cluster, with structural checks."""

    cfg = settings_for(config, settings)
    P = load_dataset(config, cfg)
    params = config.params
    bic = bicriteria_approx(P, params, cfg)
    clusters = cluster_partition(P, bic)
    alpha = bic.alpha_budget
    working = params.model_copy(update={"eps": params.eps / (alpha + 1.0)})
    dumps = []
    for cluster in clusters:
        if params.k == 1 and len(clusters) == 1:
            red = reduce_k1(cluster.points, cluster.center, working)
            dumps.append(
                {
                    "cluster": cluster.index,
                    "center": cluster.center,
                    "k1": {
                        "radius": red.radius,
                        "close_threshold": red.close_threshold,
                        "far_threshold": red.far_threshold,
                        "w_rings": [{"index": r.index, "points": int(r.positions.size)} for r in red.w_rings],
                        "close_points": int(red.close_positions.size),
                        "far_points": int(red.far_positions.size),
                    },
                    "report": count_bounds_k1(red, working).model_dump(),
                }
            )
            continue
        rp = reduction_params(cluster.points, cluster.center, working)
        dec = decompose(cluster.points, cluster.center, rp)
        dumps.append(
            {
                "cluster": cluster.index,
                "decomposition": dec.to_dict(),
                "report": count_bounds(dec, rp).model_dump(),
            }
        )
    payload = {
        "alpha_used": alpha,
        "working_eps": working.eps,
        "bicriteria_cost": bic.cost,
        "clusters": dumps,
    }
    write_json(payload, _output_path(config, cfg, "inspect.json"))
    return payload


def bench_instance(profile: str, n: int, seed: int, settings: Settings) -> WeightedPointSet:
    if profile == "gaussian":
        return WeightedPointSet.from_backend(EuclideanBackend(gaussian_mixture(n, seed=seed)))
    if profile == "rings":
        return WeightedPointSet.from_backend(EuclideanBackend(ring_stress(n, seed=seed)))
    if profile == "tuples":
        return WeightedPointSet.from_backend(WassersteinBackend(random_tuples(n, seed=seed)))
    if profile == "graph":
        return WeightedPointSet.from_backend(GraphBackend(random_graph(n, seed=seed), settings.graph_cache_size))
    if profile == "curves":
        return WeightedPointSet.from_backend(FrechetBackend(random_curves(n, seed=seed)))
    raise ConfigurationError(f"unknown bench profile {profile!r}")


def run_bench(config: RunConfig, settings: Settings | None = None) -> pd.DataFrame:
    """Time build and a short eval per size; write JSON and an aligned text table."""

    cfg = settings_for(config, settings)
    rows = []
    for n in config.sizes:
        P = bench_instance(config.profile, n, config.params.seed, cfg)
        started = time.perf_counter()
        result = build(P, config.params, config.mode, False, cfg)
        built = time.perf_counter()
        report = eval_harness(P, result.points, config.params, trials=BENCH_EVAL_TRIALS, settings=cfg)
        finished = time.perf_counter()
        rows.append(
            {
                "profile": config.profile,
                "n": n,
                "size": result.size,
                "ring_budget": result.accounting.ring_budget,
                "size_bound": result.accounting.size_bound,
                "rings": result.accounting.rings,
                "groups": result.accounting.groups_total,
                "max_relative_error": report.max_relative_error,
                "build_seconds": round(built - started, 4),
                "eval_seconds": round(finished - built, 4),
            }
        )
        LOGGER.info("Bench %s n=%d: size %d in %.3fs", config.profile, n, result.size, built - started)
    table = pd.DataFrame(rows)
    target = _output_path(config, cfg, "bench.json")
    write_json(table.to_dict(orient="records"), target)
    text = target.with_suffix(".txt")
    text.write_text(table.to_string(index=False) + "\n", encoding="utf-8")
    LOGGER.info("Wrote %s", text)
    return table


def coreset_summary(result: CoresetResult) -> str:
    acc = result.accounting
    return (
        f"coreset size {acc.size} (bound {acc.size_bound}); clusters {acc.clusters}, "
        f"rings {acc.rings}, groups {acc.groups_total}, ring budget {acc.ring_budget}, "
        f"total weight {result.points.total_weight:.17g}"
    )


def eval_summary(report: EvalReport) -> str:
    verdict = "PASS" if report.passed else "FAIL"
    return (
        f"{verdict}: {len(report.trials)} trials, max relative {report.max_relative_error:.6g}, "
        f"max additive {report.max_additive_error:.6g}, failures {report.failure_count} "
        f"at threshold {report.threshold:g}"
    )

