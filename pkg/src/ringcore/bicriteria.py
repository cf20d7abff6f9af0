"""(alpha, beta)-bicriteria approximation by D^z seeding plus local swaps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import Settings, resolve_settings
from .data_models import ClusteringParams
from .logging_utils import configure_logging
from .metric_core import WeightedPointSet
from .randomness import rng_for

LOGGER = configure_logging(__name__)

SEEDING_STREAM = 0
SWAP_STREAM = 1


@dataclass(frozen=True)
class BicriteriaResult:
    centers: np.ndarray
    alpha_budget: float
    beta: float
    labels: np.ndarray
    distances: np.ndarray
    cluster_costs: np.ndarray
    cost: float
    seeding_trace: tuple[float, ...]
    repetitions: int
    swaps: int


@dataclass(frozen=True)
class Cluster:
    """One part of the nearest-center partition."""

    index: int
    center: int
    positions: np.ndarray
    points: WeightedPointSet


@dataclass
class _Seeding:
    positions: list[int]
    columns: list[np.ndarray]
    trace: list[float]

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack(self.columns)


def _sample(rng: np.random.Generator, mass: np.ndarray) -> int:
    return int(rng.choice(mass.size, p=mass / mass.sum()))


def _seed_once(P: WeightedPointSet, count: int, z: float, rng: np.random.Generator) -> _Seeding:
    weights = P.weights
    first = _sample(rng, weights)
    column = P.distances_to(int(P.handles[first]))
    run = _Seeding([first], [column], [])
    best = column.copy()
    run.trace.append(float(np.dot(weights, best**z)))
    while len(run.positions) < count:
        mass = weights * best**z
        if mass.sum() <= 0:
            break
        pick = _sample(rng, mass)
        column = P.distances_to(int(P.handles[pick]))
        run.positions.append(pick)
        run.columns.append(column)
        best = np.minimum(best, column)
        run.trace.append(float(np.dot(weights, best**z)))
    return run


def _prune(run: _Seeding, weights: np.ndarray, z: float, keep: int) -> _Seeding:
    """Drop the center whose removal raises cost least until ``keep`` remain."""

    positions = list(run.positions)
    columns = list(run.columns)
    while len(positions) > keep:
        matrix = np.column_stack(columns)
        costs = []
        for j in range(len(positions)):
            rest = np.delete(matrix, j, axis=1)
            costs.append(float(np.dot(weights, rest.min(axis=1) ** z)))
        drop = int(np.argmin(costs))
        del positions[drop]
        del columns[drop]
    return _Seeding(positions, columns, run.trace)


def _local_swaps(
    P: WeightedPointSet, run: _Seeding, z: float, pool_size: int, max_swaps: int, rng: np.random.Generator
) -> tuple[_Seeding, int]:
    weights = P.weights
    matrix = run.matrix
    positions = list(run.positions)
    current = float(np.dot(weights, matrix.min(axis=1) ** z))
    mass = weights * matrix.min(axis=1) ** z
    if pool_size <= 0 or mass.sum() <= 0 or matrix.shape[1] == 0:
        return run, 0
    pool = rng.choice(mass.size, size=pool_size, p=mass / mass.sum())
    swaps = 0
    for q in pool:
        if swaps >= max_swaps:
            break
        q = int(q)
        if q in positions:
            continue
        dq = P.distances_to(int(P.handles[q]))
        if matrix.shape[1] == 1:
            excluding = np.full((mass.size, 1), np.inf)
        else:
            order = np.argsort(matrix, axis=1, kind="stable")
            first = matrix[np.arange(mass.size), order[:, 0]]
            second = matrix[np.arange(mass.size), order[:, 1]]
            excluding = np.where(order[:, [0]] == np.arange(matrix.shape[1])[None, :], second[:, None], first[:, None])
        swapped = np.minimum(excluding, dq[:, None])
        trial = (weights[:, None] * swapped**z).sum(axis=0)
        j = int(np.argmin(trial))
        if trial[j] < current * (1.0 - 1e-12):
            matrix[:, j] = dq
            positions[j] = q
            current = float(trial[j])
            swaps += 1
    return _Seeding(positions, [matrix[:, j].copy() for j in range(matrix.shape[1])], run.trace), swaps


def bicriteria_approx(
    P: WeightedPointSet,
    params: ClusteringParams,
    settings: Settings | None = None,
    repetitions: int | None = None,
) -> BicriteriaResult:
    """At most beta*k data-point centers from the best of several D^z seedings."""

    cfg = resolve_settings(settings)
    z = params.z
    keep = max(1, math.ceil(cfg.beta * params.k))
    draw = max(keep, math.ceil(cfg.seed_oversampling * keep))
    reps = repetitions or max(1, math.ceil(math.log2(1.0 / params.delta)))

    def run(rep: int) -> _Seeding:
        seeded = _seed_once(P, draw, z, rng_for(params.seed, SEEDING_STREAM, rep))
        if len(seeded.positions) > keep:
            seeded = _prune(seeded, P.weights, z, keep)
        return seeded

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        runs = list(pool.map(run, range(reps)))
    costs = [float(np.dot(P.weights, r.matrix.min(axis=1) ** z)) for r in runs]
    chosen = runs[int(np.argmin(costs))]

    improved, swaps = _local_swaps(
        P, chosen, z, cfg.swap_candidates * params.k, 2 * params.k, rng_for(params.seed, SWAP_STREAM)
    )
    matrix = improved.matrix
    labels = np.argmin(matrix, axis=1)
    distances = matrix[np.arange(len(P)), labels]
    point_costs = P.weights * distances**z
    cluster_costs = np.bincount(labels, weights=point_costs, minlength=matrix.shape[1])
    result = BicriteriaResult(
        centers=P.handles[np.asarray(improved.positions, dtype=np.int64)],
        alpha_budget=cfg.alpha_for(z),
        beta=cfg.beta,
        labels=labels,
        distances=distances,
        cluster_costs=cluster_costs,
        cost=float(point_costs.sum()),
        seeding_trace=tuple(improved.trace),
        repetitions=reps,
        swaps=swaps,
    )
    LOGGER.info(
        "Bicriteria: %d centers, cost %.6g after %d repetitions and %d swaps",
        result.centers.size,
        result.cost,
        reps,
        swaps,
    )
    return result


def cluster_partition(P: WeightedPointSet, result: BicriteriaResult) -> list[Cluster]:
    """Split P by nearest bicriteria center; massless parts are skipped."""

    clusters = []
    for index, center in enumerate(result.centers):
        positions = np.flatnonzero(result.labels == index)
        if positions.size == 0 or P.weights[positions].sum() <= 0:
            LOGGER.debug("Skipping massless cluster %d", index)
            continue
        clusters.append(Cluster(index, int(center), positions, P.subset(positions)))
    return clusters
