"""Tests for the D^z seeding bicriteria approximation."""

from __future__ import annotations

import numpy as np
import pytest

from ringcore.bicriteria import bicriteria_approx, cluster_partition
from ringcore.config import Settings
from ringcore.data_models import ClusteringParams
from ringcore.metric_core import EuclideanBackend, WeightedPointSet, cost_z
from ringcore.oracle import exhaustive_opt
from ringcore.synthetic import gaussian_mixture


def line(*values: float) -> WeightedPointSet:
    return WeightedPointSet.from_backend(EuclideanBackend(np.asarray(values, dtype=float)[:, None]))


@pytest.fixture()
def mixture() -> WeightedPointSet:
    return WeightedPointSet.from_backend(EuclideanBackend(gaussian_mixture(300, k=4, seed=1)))


def test_two_pairs_found_exactly() -> None:
    P = line(0, 1, 10, 11)
    result = bicriteria_approx(P, ClusteringParams(k=2, z=1.0, seed=3))
    opt, _ = exhaustive_opt(P, 2, 1.0)
    assert opt == pytest.approx(2.0)
    assert result.cost <= result.alpha_budget * opt
    assert result.centers.size <= 2


def test_k_at_least_distinct_points_costs_nothing() -> None:
    P = line(0, 5, 9)
    result = bicriteria_approx(P, ClusteringParams(k=3))
    assert result.cost == 0.0
    assert sorted(result.centers.tolist()) == [0, 1, 2]

    duplicated = line(0, 0, 5, 5)
    result = bicriteria_approx(duplicated, ClusteringParams(k=3))
    assert result.cost == 0.0
    assert result.centers.size == 2


def test_result_is_consistent(mixture: WeightedPointSet) -> None:
    result = bicriteria_approx(mixture, ClusteringParams(k=4, z=2.0, seed=5))
    assert result.centers.size == 4
    assert np.all(np.diff(result.seeding_trace) <= 1e-9)
    assert result.cluster_costs.sum() == pytest.approx(result.cost, rel=1e-12)
    assert result.cost == pytest.approx(cost_z(mixture, result.centers, 2.0), rel=1e-12)
    dists = mixture.backend.pairwise(mixture.handles, result.centers)
    assert np.array_equal(result.labels, np.argmin(dists, axis=1))


def test_same_seed_same_centers(mixture: WeightedPointSet) -> None:
    params = ClusteringParams(k=4, seed=11)
    first = bicriteria_approx(mixture, params)
    second = bicriteria_approx(mixture, params)
    threaded = bicriteria_approx(mixture, params, Settings(threads=4))
    assert np.array_equal(first.centers, second.centers)
    assert np.array_equal(first.centers, threaded.centers)
    assert first.cost == threaded.cost


def test_oversampling_is_pruned_back_to_k(mixture: WeightedPointSet) -> None:
    result = bicriteria_approx(mixture, ClusteringParams(k=4), Settings(seed_oversampling=2.0))
    assert result.centers.size == 4


def test_median_cost_close_to_optimum() -> None:
    P = WeightedPointSet.from_backend(EuclideanBackend(gaussian_mixture(40, k=4, seed=3)))
    opt, _ = exhaustive_opt(P, 4, 2.0)
    costs = [bicriteria_approx(P, ClusteringParams(k=4, z=2.0, seed=s)).cost for s in range(20)]
    assert float(np.median(costs)) <= 5.0 * opt


def test_small_instances_within_guarantee() -> None:
    rng = np.random.default_rng(0)
    for trial in range(10):
        n = int(rng.integers(3, 11))
        k = int(rng.integers(1, 3))
        z = float(rng.choice([1.0, 2.0]))
        P = WeightedPointSet.from_backend(EuclideanBackend(rng.normal(size=(n, 2))))
        opt, _ = exhaustive_opt(P, k, z)
        best = min(bicriteria_approx(P, ClusteringParams(k=k, z=z, seed=s)).cost for s in range(20))
        assert best <= 2.0 ** (z + 2) * opt + 1e-12


def test_cluster_partition_covers_points(mixture: WeightedPointSet) -> None:
    result = bicriteria_approx(mixture, ClusteringParams(k=4))
    clusters = cluster_partition(mixture, result)
    positions = np.sort(np.concatenate([c.positions for c in clusters]))
    assert np.array_equal(positions, np.arange(len(mixture)))
    for cluster in clusters:
        assert cluster.center == int(result.centers[cluster.index])
        assert len(cluster.points) == cluster.positions.size


def test_single_center_partition_is_whole_set() -> None:
    P = line(0, 1, 2, 3)
    result = bicriteria_approx(P, ClusteringParams(k=1))
    (cluster,) = cluster_partition(P, result)
    assert np.array_equal(cluster.positions, np.arange(4))
