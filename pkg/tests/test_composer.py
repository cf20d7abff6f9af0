"""Tests for the coreset builders."""

from __future__ import annotations

import json

import numpy as np
import pytest

from ringcore.composer import (
    build_barycenter_coreset,
    build_coreset,
    build_fair_coreset,
    fair_partition,
    signature,
)
from ringcore.config import Settings
from ringcore.data_models import ClusteringParams, CoresetMode, Provenance
from ringcore.exceptions import ConfigurationError, MissingLabelsError
from ringcore.metric_core import EuclideanBackend, WassersteinBackend, WeightedPointSet
from ringcore.synthetic import gaussian_mixture, random_groups, random_tuples

SMALL = Settings(alpha_budget=1.0, budget_c0=2e-5, budget_c1=0.003)


@pytest.fixture()
def mixture() -> WeightedPointSet:
    return WeightedPointSet.from_backend(EuclideanBackend(gaussian_mixture(1500, k=3, seed=6)))


def test_k_distinct_points_give_the_input() -> None:
    P = WeightedPointSet.from_backend(EuclideanBackend([[0.0], [3.0], [7.0]]))
    result = build_coreset(P, ClusteringParams(k=3))
    assert result.indices.tolist() == [0, 1, 2]
    assert result.weights.tolist() == [1.0, 1.0, 1.0]


@pytest.mark.parametrize("mode", [CoresetMode.VANILLA, CoresetMode.ASSIGNMENT_PRESERVING])
def test_build_invariants(mixture: WeightedPointSet, mode: CoresetMode) -> None:
    params = ClusteringParams(k=3, z=2.0, eps=0.3, seed=4)
    result = build_coreset(mixture, params, mode, SMALL)
    acc = result.accounting
    assert result.size < len(mixture)
    assert result.points.total_weight == pytest.approx(mixture.total_weight, rel=1e-9)
    assert np.all(np.diff(result.indices) > 0)
    assert np.array_equal(result.points.handles, mixture.handles[result.indices])
    assert acc.size == result.size <= acc.size_bound
    assert acc.within_bound
    assert acc.ring_budgets_capped >= acc.ring_sample_points
    assert {str(p) for p in result.provenance} <= {"two-point", "ring-sample", "center-mass"}
    assert result.working_eps == pytest.approx(0.3 / 2.0)
    assert result.alpha_used == 1.0


def test_build_is_deterministic(mixture: WeightedPointSet) -> None:
    params = ClusteringParams(k=3, eps=0.3, seed=9)
    first = build_coreset(mixture, params, settings=SMALL)
    second = build_coreset(mixture, params, settings=SMALL)
    threaded = build_coreset(mixture, params, settings=SMALL.model_copy(update={"threads": 4}))
    for other in (second, threaded):
        assert np.array_equal(first.indices, other.indices)
        assert np.array_equal(first.weights, other.weights)
        assert first.provenance == other.provenance


def test_single_cluster_takes_k1_path() -> None:
    P = WeightedPointSet.from_backend(EuclideanBackend(gaussian_mixture(400, k=1, seed=2)))
    result = build_coreset(P, ClusteringParams(k=1, eps=0.4), settings=SMALL)
    assert result.accounting.k1_points <= 3
    assert result.accounting.groups_total == 0
    assert result.points.total_weight == pytest.approx(400.0, rel=1e-9)


def test_massless_ring_is_not_sampled() -> None:
    P = WeightedPointSet.from_backend(EuclideanBackend([[0.0], [100.0], [5.0]]), [1.0, 1.0, 0.0])
    result = build_coreset(P, ClusteringParams(k=2, eps=0.3))
    assert result.points.total_weight == pytest.approx(2.0)
    assert 2 not in result.indices.tolist()


def test_massless_ring_on_k1_path() -> None:
    P = WeightedPointSet.from_backend(EuclideanBackend([[0.0], [1.0], [50.0]]), [1.0, 1.0, 0.0])
    result = build_coreset(P, ClusteringParams(k=1, eps=0.5))
    assert result.points.total_weight == pytest.approx(2.0)
    assert 2 not in result.indices.tolist()
    assert result.accounting.groups_total == 0


def test_payload_is_json_ready(mixture: WeightedPointSet) -> None:
    result = build_coreset(mixture, ClusteringParams(k=3), settings=SMALL)
    payload = json.loads(json.dumps(result.to_payload()))
    assert list(payload)[:4] == ["points", "indices", "weights", "provenance"]
    assert payload["backend"] == {"kind": "euclidean", "size": 1500, "d": 2}
    assert payload["size_accounting"]["size"] == result.size


def test_fair_partition_signatures() -> None:
    labels = [{"b", "a"}, {"a"}, {"a", "b"}, {"c"}]
    P = WeightedPointSet.from_backend(EuclideanBackend(np.arange(4.0)[:, None]), group_labels=labels)
    partition = fair_partition(P)
    assert partition.signatures == ("a;b", "a", "c")
    assert partition.parts["a;b"].tolist() == [0, 2]
    assert partition.delta == 3
    assert signature(frozenset({"z", "y"})) == "y;z"


def test_fair_single_group_matches_assignment_preserving(mixture: WeightedPointSet) -> None:
    labelled = WeightedPointSet.from_backend(mixture.backend, group_labels=[{"all"}] * len(mixture))
    params = ClusteringParams(k=3, eps=0.3, seed=1)
    fair = build_fair_coreset(labelled, params, SMALL)
    plain = build_coreset(labelled, params, CoresetMode.ASSIGNMENT_PRESERVING, SMALL)
    assert np.array_equal(fair.indices, plain.indices)
    assert np.array_equal(fair.weights, plain.weights)
    assert fair.provenance == plain.provenance


def test_fair_parts_keep_their_mass(mixture: WeightedPointSet) -> None:
    labels = random_groups(len(mixture), groups=2, seed=3, overlap=0.0)
    labelled = WeightedPointSet.from_backend(mixture.backend, group_labels=labels)
    result = build_fair_coreset(labelled, ClusteringParams(k=3, eps=0.3), SMALL)
    for name in ("g0", "g1"):
        full = sum(w for w, g in zip(labelled.weights, labelled.group_labels) if name in g)
        kept = sum(w for w, g in zip(result.weights, result.points.group_labels) if name in g)
        assert kept == pytest.approx(full, rel=1e-9)
    assert set(result.fair_parts) == {"g0", "g1"}


def test_fair_needs_labels(mixture: WeightedPointSet) -> None:
    with pytest.raises(MissingLabelsError):
        build_fair_coreset(mixture, ClusteringParams(k=2))


def test_barycenter_of_identical_tuples() -> None:
    tuples = np.tile([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]], (25, 1, 1))
    P = WeightedPointSet.from_backend(WassersteinBackend(tuples, p=2.0))
    result = build_barycenter_coreset(P, ClusteringParams(k=1))
    assert result.size == 1
    assert result.weights.tolist() == [25.0]
    assert result.provenance == (Provenance.CENTER_MASS,)
    assert result.builder == "barycenter"


def test_barycenter_budget_ignores_p() -> None:
    tuples = random_tuples(120, ell=3, seed=5)
    params = ClusteringParams(k=1, eps=0.25)
    budgets = {
        build_barycenter_coreset(
            WeightedPointSet.from_backend(WassersteinBackend(tuples, p=p)), params, Settings(budget_c1=0.02)
        ).accounting.ring_budget
        for p in (1.0, 2.0)
    }
    assert len(budgets) == 1


def test_barycenter_rejects_other_inputs(mixture: WeightedPointSet) -> None:
    with pytest.raises(ConfigurationError):
        build_barycenter_coreset(mixture, ClusteringParams(k=1))
    tuples = WeightedPointSet.from_backend(WassersteinBackend(random_tuples(10, seed=1)))
    with pytest.raises(ConfigurationError):
        build_barycenter_coreset(tuples, ClusteringParams(k=2))
