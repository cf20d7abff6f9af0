"""Brute-force oracles and the randomized coreset evaluation harness.

The oracles share nothing with the main solvers except the backend's ``dist``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .assignment import AssignmentConstraint, induced_constraint, random_constraint, solve_transport
from .bicriteria import BicriteriaResult, bicriteria_approx
from .composer import fair_partition
from .config import Settings, resolve_settings
from .data_models import ClusteringParams, EvalReport, TrialRecord
from .exceptions import BudgetExceededError, ConfigurationError, MassMismatchError
from .logging_utils import configure_logging
from .metric_core import MetricBackend, WeightedPointSet, cost_z
from .randomness import rng_for

LOGGER = configure_logging(__name__)

EVAL_STREAM = 3
EXHAUSTIVE_LIMIT = 1_000_000
TRANSPORT_MASS_LIMIT = 12
TRANSPORT_CENTER_LIMIT = 3
WASSERSTEIN_TUPLE_LIMIT = 6
CONSTRAINT_MODES = ("none", "induced", "random", "mixed")


def exhaustive_opt(
    P: WeightedPointSet,
    k: int,
    z: float = 1.0,
    candidates: Sequence[int] | np.ndarray | None = None,
    limit: int = EXHAUSTIVE_LIMIT,
) -> tuple[float, list[int]]:
    """Minimum cost over every k-subset of candidate centers (data points by default)."""

    cand = np.asarray(P.handles if candidates is None else candidates, dtype=np.int64)
    if k >= cand.size:
        return cost_z(P, cand, z), [int(c) for c in cand]
    combos = math.comb(cand.size, k)
    if combos > limit:
        raise BudgetExceededError(f"{combos} center subsets exceed the enumeration budget {limit}")
    dz = np.array([[P.backend.dist(int(x), int(c)) for c in cand] for x in P.handles]) ** z
    best_cost, best = math.inf, None
    iterator = itertools.combinations(range(cand.size), k)
    while True:
        chunk = np.array(list(itertools.islice(iterator, 4096)), dtype=np.int64)
        if chunk.size == 0:
            break
        costs = P.weights @ dz[:, chunk].min(axis=2)
        j = int(np.argmin(costs))
        if costs[j] < best_cost:
            best_cost, best = float(costs[j]), chunk[j]
    return best_cost, [int(cand[i]) for i in best]


def _as_int(values: np.ndarray, what: str) -> np.ndarray:
    rounded = np.rint(values)
    if not np.allclose(values, rounded, rtol=0.0, atol=1e-9):
        raise ValueError(f"{what} must be integral for the brute-force transport oracle")
    return rounded.astype(np.int64)


def brute_transport(
    P: WeightedPointSet,
    centers: Sequence[int] | np.ndarray,
    constraint: AssignmentConstraint,
    z: float = 1.0,
) -> float:
    """Exact minimum over all integral assignments (integer weights and masses)."""

    center_arr = np.asarray(centers, dtype=np.int64).reshape(-1)
    supply = _as_int(P.weights, "point weights")
    demand = _as_int(np.asarray(constraint.masses, dtype=float), "constraint masses")
    if center_arr.size > TRANSPORT_CENTER_LIMIT or supply.sum() > TRANSPORT_MASS_LIMIT:
        raise BudgetExceededError("brute transport handles total mass <= 12 and k <= 3")
    if supply.sum() != demand.sum() or demand.size != center_arr.size:
        raise MassMismatchError("mass mismatch between point weights and constraint")
    cost = [[P.backend.dist(int(x), int(c)) ** z for c in center_arr] for x in P.handles]

    def splits(units: int, caps: list[int]):
        if len(caps) == 1:
            if units <= caps[0]:
                yield (units,)
            return
        for first in range(min(units, caps[0]) + 1):
            for rest in splits(units - first, caps[1:]):
                yield (first, *rest)

    def search(i: int, remaining: list[int]) -> float:
        if i == len(supply):
            return 0.0 if not any(remaining) else math.inf
        best = math.inf
        for split in splits(int(supply[i]), remaining):
            here = sum(a * c for a, c in zip(split, cost[i]))
            rest = search(i + 1, [r - a for r, a in zip(remaining, split)])
            best = min(best, here + rest)
        return best

    return float(search(0, [int(d) for d in demand]))


def brute_wasserstein(first: np.ndarray, second: np.ndarray, p: float = 1.0) -> float:
    """p-Wasserstein distance by enumerating all bijections."""

    first, second = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
    ell = first.shape[0]
    if ell > WASSERSTEIN_TUPLE_LIMIT:
        raise BudgetExceededError(f"brute Wasserstein enumerates l <= {WASSERSTEIN_TUPLE_LIMIT}, got {ell}")
    if second.shape[0] != ell:
        raise ValueError("tuples differ in length")
    best = math.inf
    for perm in itertools.permutations(range(ell)):
        total = sum(float(np.linalg.norm(first[i] - second[j])) ** p for i, j in enumerate(perm))
        best = min(best, total)
    return best ** (1.0 / p)


# Generators return either handles (an int array) or new backend elements (a list).
CenterGenerator = Callable[[WeightedPointSet, int, np.random.Generator, BicriteriaResult], "list | np.ndarray"]


def uniform_box(P: WeightedPointSet, k: int, rng: np.random.Generator, bic: BicriteriaResult) -> list:
    return P.backend.sample_items(rng, k, near=P.handles)


def data_subsample(P: WeightedPointSet, k: int, rng: np.random.Generator, bic: BicriteriaResult) -> np.ndarray:
    picks = rng.choice(len(P), size=min(k, len(P)), replace=False)
    return P.handles[picks]


def _scale(bic: BicriteriaResult) -> float:
    positive = bic.distances[bic.distances > 0]
    return float(np.median(positive)) if positive.size else 1.0


def perturbed_bicriteria(P: WeightedPointSet, k: int, rng: np.random.Generator, bic: BicriteriaResult) -> list:
    picks = rng.choice(bic.centers, size=k, replace=bic.centers.size < k)
    return P.backend.perturb(picks, 0.5 * _scale(bic), rng)


def ring_boundary(P: WeightedPointSet, k: int, rng: np.random.Generator, bic: BicriteriaResult) -> list:
    """Centers near data points that sit close to a dyadic ring boundary."""

    d = bic.distances
    positive = np.flatnonzero(d > 0)
    if positive.size == 0:
        return data_subsample(P, k, rng, bic)
    offset = np.abs(np.log2(d[positive]) - np.rint(np.log2(d[positive])))
    closeness = 1.0 / (offset + 1e-3)
    picks = rng.choice(positive, size=k, replace=positive.size < k, p=closeness / closeness.sum())
    return P.backend.perturb(P.handles[picks], 0.05 * _scale(bic), rng)


GENERATORS: dict[str, CenterGenerator] = {
    "uniform_box": uniform_box,
    "data_subsample": data_subsample,
    "perturbed_bicriteria": perturbed_bicriteria,
    "ring_boundary": ring_boundary,
}


def _extend(backend: MetricBackend, items: list | np.ndarray) -> tuple[MetricBackend, np.ndarray]:
    # Handle arrays address the backend directly; anything else is a new element.
    if isinstance(items, np.ndarray) and items.dtype.kind == "i":
        return backend, items.astype(np.int64)
    return backend.extend(items)


def _errors(cost_full: float, cost_coreset: float, reference: float) -> tuple[float, float]:
    gap = abs(cost_coreset - cost_full)
    if cost_full > 0:
        relative = gap / cost_full
    else:
        relative = 0.0 if gap == 0 else math.inf
    denom = cost_full + reference
    additive = gap / denom if denom > 0 else (0.0 if gap == 0 else math.inf)
    return relative, additive


def eval_harness(
    P: WeightedPointSet,
    S: WeightedPointSet,
    params: ClusteringParams,
    trials: int | None = None,
    generators: Sequence[str] | None = None,
    constraint_mode: str = "none",
    threshold: float | None = None,
    additive_reference: float = 0.0,
    settings: Settings | None = None,
    bicriteria: BicriteriaResult | None = None,
    fixed_constraints: Sequence[AssignmentConstraint] = (),
) -> EvalReport:
    """Compare costs of P and S over random center sets and optional constraints.

    With ``additive_reference`` > 0 a trial fails when ``|diff| / (cost + reference)``
    exceeds the threshold, otherwise when the relative error does. Each entry of
    ``fixed_constraints`` adds one trial on its own centers (handles of P's backend).
    """

    cfg = resolve_settings(settings)
    if S.backend is not P.backend:
        raise ConfigurationError("coreset and dataset must share one backend")
    if constraint_mode not in CONSTRAINT_MODES:
        raise ConfigurationError(f"unknown constraint mode {constraint_mode!r}")
    count = trials or cfg.eval_trials
    limit = threshold if threshold is not None else (cfg.eval_threshold or params.eps)
    names = list(generators or GENERATORS)
    unknown = [n for n in names if n not in GENERATORS]
    if unknown:
        raise ConfigurationError(f"unknown center generators {unknown}")
    bic = bicriteria or bicriteria_approx(P, params, cfg)
    modes = ("none", "induced", "random")

    def run(trial: int) -> TrialRecord:
        rng = rng_for(params.seed, EVAL_STREAM, trial)
        name = names[trial % len(names)]
        items = GENERATORS[name](P, params.k, rng, bic)
        backend, centers = _extend(P.backend, items)
        full, core = P.on(backend), S.on(backend)
        mode = modes[trial % 3] if constraint_mode == "mixed" else constraint_mode
        gamma = None
        if mode == "induced":
            gamma = induced_constraint(full, centers)
        elif mode == "random":
            gamma = random_constraint(centers, full.total_weight, rng)
        return record(trial, name, full, core, centers, gamma)

    def record(
        trial: int,
        name: str,
        full: WeightedPointSet,
        core: WeightedPointSet,
        centers: np.ndarray,
        gamma: AssignmentConstraint | None,
    ) -> TrialRecord:
        if gamma is None:
            cost_full, cost_core = cost_z(full, centers, params.z), cost_z(core, centers, params.z)
        else:
            cost_full = solve_transport(full, centers, gamma, params.z, cfg).objective
            cost_core = solve_transport(core, centers, gamma, params.z, cfg).objective
        relative, additive = _errors(cost_full, cost_core, additive_reference)
        return TrialRecord(
            trial=trial,
            generator=name,
            centers=[int(c) for c in centers],
            constraint=None if gamma is None else list(gamma.masses),
            cost_full=cost_full,
            cost_coreset=cost_core,
            relative_error=relative,
            additive_error=additive,
        )

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        records = list(pool.map(run, range(count)))
    for offset, gamma in enumerate(fixed_constraints):
        centers = np.asarray(gamma.centers, dtype=np.int64)
        records.append(record(count + offset, "constraint", P, S, centers, gamma))
    return summarize(records, limit, additive_reference)


def summarize(records: list[TrialRecord], threshold: float, additive_reference: float = 0.0) -> EvalReport:
    relative = np.array([r.relative_error for r in records])
    additive = np.array([r.additive_error for r in records])
    judged = additive if additive_reference > 0 else relative
    quantiles = {f"p{q}": float(np.quantile(judged, q / 100)) for q in (50, 90, 99)}
    report = EvalReport(
        trials=records,
        threshold=threshold,
        additive_reference=additive_reference,
        max_relative_error=float(relative.max()),
        mean_relative_error=float(relative.mean()),
        quantiles=quantiles,
        max_additive_error=float(additive.max()),
        failure_count=int((judged > threshold).sum()),
    )
    LOGGER.info(
        "Evaluated %d trials: max relative %.4g, max additive %.4g, %d failures at %.4g",
        len(records),
        report.max_relative_error,
        report.max_additive_error,
        report.failure_count,
        threshold,
    )
    return report


def eval_fair_parts(
    P: WeightedPointSet,
    S: WeightedPointSet,
    params: ClusteringParams,
    trials: int | None = None,
    threshold: float | None = None,
    settings: Settings | None = None,
) -> dict[str, EvalReport]:
    """Per-part constrained evaluation of a fair coreset (induced constraints per part)."""

    full_parts, core_parts = fair_partition(P), fair_partition(S)
    reports = {}
    for key in full_parts.signatures:
        if key not in core_parts.parts:
            raise ConfigurationError(f"coreset has no points for group signature {key!r}")
        reports[key] = eval_harness(
            P.subset(full_parts.parts[key]),
            S.subset(core_parts.parts[key]),
            params,
            trials=trials,
            constraint_mode="induced",
            threshold=threshold,
            settings=settings,
        )
    return reports
