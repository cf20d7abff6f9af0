"""Synthetic instance generators for tests and benchmarks."""

from __future__ import annotations

import networkx as nx
import numpy as np

from .randomness import derive_seed, rng_for


def gaussian_mixture(n: int, k: int = 5, d: int = 2, seed: int = 0, spread: float = 10.0) -> np.ndarray:
    """``n`` points from ``k`` unit-variance Gaussians with means uniform in ``[-spread, spread]^d``."""

    rng = rng_for(seed)
    means = rng.uniform(-spread, spread, size=(k, d))
    labels = rng.integers(0, k, size=n)
    return means[labels] + rng.normal(size=(n, d))


def ring_points(n: int, inner_radius: float = 1.0, d: int = 2, seed: int = 0, center=None) -> np.ndarray:
    """Points uniformly spread over directions with radius in (r, 2r] around ``center``."""

    rng = rng_for(seed)
    direction = rng.normal(size=(n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = inner_radius * (2.0 - rng.random(n))
    origin = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    return origin + direction * radius[:, None]


def ring_stress(n: int, k: int = 3, d: int = 2, seed: int = 0, decades: float = 10.0) -> np.ndarray:
    """Clusters whose radii are log-uniform over ``decades`` octaves, so many rings are populated."""

    rng = rng_for(seed)
    means = rng.uniform(-1e3, 1e3, size=(k, d))
    labels = rng.integers(0, k, size=n)
    direction = rng.normal(size=(n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = 2.0 ** rng.uniform(-decades / 2, decades / 2, size=n)
    return means[labels] + direction * radius[:, None]


def random_tuples(n: int, ell: int = 3, d: int = 2, seed: int = 0, clusters: int = 2) -> np.ndarray:
    """``n`` l-point tuples, jittered copies of a few template tuples."""

    rng = rng_for(seed)
    templates = rng.uniform(-5.0, 5.0, size=(clusters, ell, d))
    labels = rng.integers(0, clusters, size=n)
    return templates[labels] + rng.normal(scale=0.5, size=(n, ell, d))


def random_graph(n: int, seed: int = 0, degree: int = 4, rewire: float = 0.1) -> nx.Graph:
    """Connected small-world graph on ``0..n-1`` with edge weights uniform in [1, 10)."""

    graph = nx.connected_watts_strogatz_graph(n, degree, rewire, seed=derive_seed(seed) % 2**32)
    rng = rng_for(seed, 1)
    for u, v in sorted(graph.edges()):
        graph[u][v]["weight"] = float(rng.uniform(1.0, 10.0))
    return graph


def random_curves(n: int, m: int = 6, d: int = 2, seed: int = 0, clusters: int = 2) -> list[np.ndarray]:
    """Random-walk polylines with 2..m vertices around a few start points."""

    rng = rng_for(seed)
    starts = rng.uniform(-10.0, 10.0, size=(clusters, d))
    curves = []
    for _ in range(n):
        length = int(rng.integers(2, m + 1))
        steps = rng.normal(size=(length, d))
        steps[0] = starts[int(rng.integers(0, clusters))]
        curves.append(np.cumsum(steps, axis=0))
    return curves


def random_groups(n: int, groups: int = 3, seed: int = 0, overlap: float = 0.3) -> list[frozenset[str]]:
    """One primary group per point, plus each other group with probability ``overlap``."""

    rng = rng_for(seed)
    names = [f"g{i}" for i in range(groups)]
    out = []
    for primary in rng.integers(0, groups, size=n):
        extra = {names[j] for j in range(groups) if j != primary and rng.random() < overlap}
        out.append(frozenset({names[primary], *extra}))
    return out
