"""Unit tests for metric backends, point sets and the clustering cost."""

from __future__ import annotations

import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringcore.config import Settings
from ringcore.exceptions import (
    EmptyCenterSetError,
    InvalidHandleError,
    TupleLengthError,
    UnreachableError,
    ZeroWeightError,
)
from ringcore.metric_core import (
    NEG_INF_RING,
    NEG_INFINITY,
    EuclideanBackend,
    FrechetBackend,
    GraphBackend,
    WassersteinBackend,
    WeightedPointSet,
    avg_radius,
    cost_z,
    discrete_frechet,
    nearest_centers,
    ring_index,
    ring_indices,
)
from ringcore.synthetic import random_curves, random_graph, random_tuples


def line(*values: float) -> WeightedPointSet:
    return WeightedPointSet.from_backend(EuclideanBackend(np.asarray(values, dtype=float)[:, None]))


def test_euclidean_distance_is_pythagorean() -> None:
    backend = EuclideanBackend([[0.0, 0.0], [3.0, 4.0]])
    assert backend.dist(0, 1) == pytest.approx(5.0)
    assert backend.dist(1, 1) == 0.0


def test_wasserstein_identity_matching() -> None:
    backend = WassersteinBackend([[[0, 0], [1, 0]], [[0, 1], [1, 1]]], p=1.0)
    assert backend.dist(0, 1) == pytest.approx(2.0)


def test_wasserstein_rejects_ragged_tuples() -> None:
    with pytest.raises(TupleLengthError):
        WassersteinBackend([[[0, 0], [1, 0]], [[0, 1]]])


def test_graph_distance_and_unreachable_pair() -> None:
    graph = nx.Graph()
    graph.add_edge(0, 1, weight=1.0)
    graph.add_edge(1, 2, weight=2.0)
    graph.add_node(7)
    backend = GraphBackend(graph, cache_size=4)
    assert backend.dist(0, 2) == pytest.approx(3.0)
    with pytest.raises(UnreachableError, match="unreachable"):
        backend.dist(0, backend.handles_of([7])[0])


def test_graph_rejects_negative_weights() -> None:
    graph = nx.Graph()
    graph.add_edge(0, 1, weight=-1.0)
    with pytest.raises(ValueError):
        GraphBackend(graph)


def test_discrete_frechet_parallel_lines() -> None:
    first = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    second = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
    assert discrete_frechet(first, second) == pytest.approx(1.0)
    backend = FrechetBackend([first, second])
    assert backend.dist(0, 1) == pytest.approx(1.0)


def test_frechet_sdim_uses_center_length() -> None:
    backend = FrechetBackend([np.zeros((8, 2)), np.ones((3, 2))])
    assert backend.default_sdim(Settings()) == pytest.approx(4 * 64 * 3.0)
    assert backend.default_sdim(Settings(frechet_center_length=2)) == pytest.approx(4 * 4 * 3.0)


def test_invalid_handle_raises() -> None:
    backend = EuclideanBackend([[0.0], [1.0]])
    with pytest.raises(InvalidHandleError):
        backend.dist(0, 2)


def test_cost_examples() -> None:
    assert cost_z(line(0, 1, 2), [0], 1.0) == pytest.approx(3.0)
    assert cost_z(line(0, 4), [0, 1], 2.0) == 0.0


def test_cost_matches_naive_double_loop() -> None:
    rng = np.random.default_rng(7)
    coords = rng.normal(size=(20, 2))
    weights = rng.uniform(0.5, 2.0, size=20)
    P = WeightedPointSet.from_backend(EuclideanBackend(coords), weights)
    centers = [2, 9, 15]
    naive = 0.0
    for i in range(20):
        nearest = min(math.dist(coords[i], coords[c]) for c in centers)
        naive += weights[i] * nearest**2
    assert cost_z(P, centers, 2.0) == pytest.approx(naive, rel=1e-12)


def test_cost_requires_centers() -> None:
    with pytest.raises(EmptyCenterSetError):
        cost_z(line(0, 1), [], 1.0)


def test_cost_is_monotone_in_centers() -> None:
    rng = np.random.default_rng(3)
    P = WeightedPointSet.from_backend(EuclideanBackend(rng.normal(size=(50, 3))))
    base = cost_z(P, [0, 1], 1.5)
    assert cost_z(P, [0, 1, 17, 33], 1.5) <= base


def test_nearest_centers_breaks_ties_low() -> None:
    P = line(0, 1, 2)
    labels, dists = nearest_centers(P, [0, 2])
    assert labels.tolist() == [0, 0, 1]
    assert dists.tolist() == [0.0, 1.0, 0.0]


def test_ring_index_examples() -> None:
    assert ring_index(1.0) == 0
    assert ring_index(3.0) == 2
    assert ring_index(0.0) == NEG_INFINITY


def test_ring_index_boundary_tolerance_moves_down() -> None:
    d = 2.0 * (1.0 + 1e-13)
    assert ring_index(d) == 2
    assert ring_index(d, boundary_tol=1e-12) == 1


@given(st.floats(min_value=1e-300, max_value=1e300, allow_nan=False, allow_infinity=False))
def test_ring_index_partitions_positive_reals(d: float) -> None:
    i = ring_index(d)
    assert math.ldexp(1.0, i - 1) < d <= math.ldexp(1.0, i)


def test_ring_indices_match_scalar() -> None:
    rng = np.random.default_rng(11)
    values = np.concatenate([[0.0, 1.0, 2.0, 4.0], rng.exponential(size=200)])
    vector = ring_indices(values)
    for value, index in zip(values, vector):
        expected = ring_index(float(value))
        assert index == (NEG_INF_RING if expected == NEG_INFINITY else expected)


def test_avg_radius_examples() -> None:
    assert avg_radius(line(0, 2), 0, 1.0) == pytest.approx(1.0)
    assert avg_radius(line(0, 0, 2), 0, 2.0) == pytest.approx(math.sqrt(4.0 / 3.0))
    assert avg_radius(line(5, 5, 5), 0, 1.0) == 0.0


def test_point_set_validation() -> None:
    backend = EuclideanBackend([[0.0], [1.0]])
    with pytest.raises(ZeroWeightError):
        WeightedPointSet(backend, np.array([0, 1]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        WeightedPointSet(backend, np.array([0, 1]), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        WeightedPointSet(backend, np.array([0, 1]), np.ones(2), (frozenset({"a"}),))


def test_extend_appends_new_points() -> None:
    backend = EuclideanBackend([[0.0, 0.0]])
    extended, handles = backend.extend([np.array([3.0, 4.0])])
    assert handles.tolist() == [1]
    assert extended.dist(0, 1) == pytest.approx(5.0)
    assert backend.size == 1


def _backends(seed: int):
    rng = np.random.default_rng(seed)
    yield EuclideanBackend(rng.normal(size=(12, 3)))
    yield GraphBackend(random_graph(12, seed=seed))
    yield WassersteinBackend(random_tuples(12, ell=3, seed=seed), p=2.0)
    yield FrechetBackend(random_curves(12, m=4, seed=seed))


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(min_value=0, max_value=2**31 - 1))
def test_metric_axioms_on_all_triples(seed: int, pair_seed: int) -> None:
    rng = np.random.default_rng(pair_seed)
    for backend in _backends(seed):
        handles = np.arange(backend.size)
        D = backend.pairwise(handles, handles)
        assert np.all(D >= 0)
        assert np.all(np.diag(D) == 0.0)
        np.testing.assert_allclose(D, D.T, rtol=1e-12, atol=1e-12)
        # Every (x, w, y) with x, y, w in the store: d(x, y) <= d(x, w) + d(w, y).
        through = D[:, :, None] + D[None, :, :]
        direct = D[:, None, :]
        assert np.all(direct <= through + 1e-9 * np.maximum(1.0, direct))
        x, y = (int(v) for v in rng.integers(0, backend.size, size=2))
        assert backend.dist(x, y) == pytest.approx(D[x, y], rel=1e-12, abs=1e-12)


def test_graph_samples_stay_in_the_data_component() -> None:
    graph = nx.path_graph(5)
    graph.add_edge(10, 11)
    nx.set_edge_attributes(graph, 1.0, "weight")
    backend = GraphBackend(graph)
    near = backend.handles_of([0, 3])
    picks = backend.sample_items(np.random.default_rng(0), 50, near=near)
    assert set(picks) <= {0, 1, 2, 3, 4}


def test_euclidean_samples_stay_in_the_near_box() -> None:
    backend = EuclideanBackend([[0.0, 0.0], [1.0, 2.0], [50.0, 50.0]])
    picks = np.asarray(backend.sample_items(np.random.default_rng(1), 40, near=[0, 1]))
    assert picks.shape == (40, 2)
    assert np.all(picks >= 0.0)
    assert np.all(picks[:, 0] <= 1.0)
    assert np.all(picks[:, 1] <= 2.0)


def test_pairwise_agrees_with_dist() -> None:
    for backend in _backends(5):
        matrix = backend.pairwise([0, 1, 2], [3, 4])
        for a, i in enumerate([0, 1, 2]):
            for b, j in enumerate([3, 4]):
                assert matrix[a, b] == pytest.approx(backend.dist(i, j), rel=1e-12, abs=1e-12)
