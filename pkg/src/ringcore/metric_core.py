"""Metric backends, weighted point sets and the (k, z)-clustering cost functional."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, ClassVar, Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .config import Settings, resolve_settings
from .data_models import BackendKind
from .exceptions import (
    EmptyCenterSetError,
    InvalidHandleError,
    TupleLengthError,
    UnreachableError,
    ZeroWeightError,
)
from .logging_utils import configure_logging

LOGGER = configure_logging(__name__)

NEG_INFINITY = float("-inf")
# Integer stand-in for NEG_INFINITY inside index arrays.
NEG_INF_RING = int(np.iinfo(np.int64).min)
RING_BOUNDARY_TOL = 1e-12


def wasserstein_distance(first: np.ndarray, second: np.ndarray, p: float = 1.0) -> float:
    """p-Wasserstein distance between two equally sized point tuples.

    Solves the l x l assignment problem on ``dist**p`` exactly and returns the
    optimal matching cost raised to ``1/p``.
    """

    cost = cdist(first, second) ** p
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() ** (1.0 / p))


def discrete_frechet(first: np.ndarray, second: np.ndarray) -> float:
    """Discrete Frechet distance between two polylines (Eiter and Mannila)."""

    if len(first) == 0 or len(second) == 0:
        raise ValueError("Vertices must not be empty.")
    dist = cdist(first, second)
    rows, cols = dist.shape
    table = np.empty_like(dist)
    table[0, 0] = dist[0, 0]
    for i in range(1, rows):
        table[i, 0] = max(table[i - 1, 0], dist[i, 0])
    for j in range(1, cols):
        table[0, j] = max(table[0, j - 1], dist[0, j])
    for i in range(1, rows):
        for j in range(1, cols):
            table[i, j] = max(min(table[i - 1, j], table[i, j - 1], table[i - 1, j - 1]), dist[i, j])
    return float(table[-1, -1])


class MetricBackend(ABC):
    """Distance provider over an immutable store addressed by integer handles."""

    kind: ClassVar[BackendKind]

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of elements in the store."""

    @abstractmethod
    def _dist(self, i: int, j: int) -> float:
        """Distance between two distinct, validated handles."""

    @abstractmethod
    def extend(self, items: Sequence[Any]) -> tuple["MetricBackend", np.ndarray]:
        """Return a backend that also holds ``items`` and the handles assigned to them."""

    @abstractmethod
    def sample_items(
        self, rng: np.random.Generator, count: int, near: Sequence[int] | None = None
    ) -> list[Any]:
        """Draw ``count`` random elements from the region spanned by ``near`` (default: the whole store)."""

    def _near(self, near: Sequence[int] | None) -> np.ndarray:
        if near is None:
            return np.arange(self.size, dtype=np.int64)
        arr = self.check_handles(near)
        if arr.size == 0:
            raise ValueError("sampling region needs at least one handle")
        return arr

    @abstractmethod
    def perturb(self, handles: Sequence[int], scale: float, rng: np.random.Generator) -> list[Any]:
        """Return elements close to the given handles (used for center generators)."""

    @abstractmethod
    def default_sdim(self, settings: Settings | None = None) -> float:
        """Shattering-dimension bound used by the unconstrained sample budget."""

    def check_handles(self, handles: Iterable[int] | np.ndarray) -> np.ndarray:
        arr = np.asarray(handles)
        if arr.size == 0:
            return np.zeros(0, dtype=np.int64)
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise InvalidHandleError(f"point handles must be integers, got {arr.dtype}")
        arr = arr.astype(np.int64).reshape(-1)
        if arr.min() < 0 or arr.max() >= self.size:
            bad = arr[(arr < 0) | (arr >= self.size)][0]
            raise InvalidHandleError(f"handle {bad} outside backend of size {self.size}")
        return arr

    def dist(self, x: int, y: int) -> float:
        i, j = self.check_handles([x, y])
        if i == j:
            return 0.0
        return float(self._dist(int(i), int(j)))

    def pairwise(self, rows: Iterable[int] | np.ndarray, cols: Iterable[int] | np.ndarray) -> np.ndarray:
        """Distance matrix between two handle lists."""

        return self._pairwise(self.check_handles(rows), self.check_handles(cols))

    def _pairwise(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        out = np.zeros((rows.size, cols.size))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                if i != j:
                    out[a, b] = self._dist(int(i), int(j))
        return out

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "size": self.size}


class EuclideanBackend(MetricBackend):
    """Points of R^d under the Euclidean norm."""

    kind = BackendKind.EUCLIDEAN

    def __init__(self, coords: Sequence[Sequence[float]] | np.ndarray) -> None:
        arr = np.array(coords, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError("Euclidean coordinates must form an (n, d) table.")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Euclidean coordinates must be finite.")
        arr.setflags(write=False)
        self._coords = arr

    @property
    def size(self) -> int:
        return int(self._coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self._coords.shape[1])

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    def _dist(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self._coords[i] - self._coords[j]))

    def _pairwise(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        if rows.size == 0 or cols.size == 0:
            return np.zeros((rows.size, cols.size))
        return cdist(self._coords[rows], self._coords[cols])

    def extend(self, items: Sequence[Sequence[float]] | np.ndarray) -> tuple["EuclideanBackend", np.ndarray]:
        extra = np.asarray(items, dtype=float).reshape(-1, self.dim)
        backend = EuclideanBackend(np.vstack([self._coords, extra]))
        return backend, np.arange(self.size, self.size + extra.shape[0], dtype=np.int64)

    def sample_items(
        self, rng: np.random.Generator, count: int, near: Sequence[int] | None = None
    ) -> list[np.ndarray]:
        box = self._coords[self._near(near)]
        low, high = box.min(axis=0), box.max(axis=0)
        return list(rng.uniform(low, high, size=(count, self.dim)))

    def perturb(self, handles: Sequence[int], scale: float, rng: np.random.Generator) -> list[np.ndarray]:
        base = self._coords[self.check_handles(handles)]
        return list(base + rng.normal(0.0, scale, size=base.shape))

    def default_sdim(self, settings: Settings | None = None) -> float:
        return float(self.dim + 1)

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), "d": self.dim}


class GraphBackend(MetricBackend):
    """Shortest-path metric of a nonnegatively weighted graph.

    Handles index the sorted vertex list. Single-source shortest-path trees are
    cached per source (LRU, ``functools.lru_cache`` is thread-safe).
    """

    kind = BackendKind.GRAPH

    def __init__(self, graph: nx.Graph, cache_size: int | None = None) -> None:
        for u, v, weight in graph.edges(data="weight", default=1.0):
            if not math.isfinite(weight) or weight < 0:
                raise ValueError(f"edge ({u}, {v}) has invalid weight {weight!r}")
        self._graph = nx.freeze(graph.copy())
        self._nodes: tuple[Any, ...] = tuple(sorted(graph.nodes))
        self._index = {node: i for i, node in enumerate(self._nodes)}
        capacity = cache_size if cache_size is not None else resolve_settings(None).graph_cache_size
        self._sssp = lru_cache(maxsize=capacity)(self._single_source)

    @property
    def size(self) -> int:
        return len(self._nodes)

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def vertex_of(self, handle: int) -> Any:
        return self._nodes[int(self.check_handles([handle])[0])]

    def handles_of(self, vertices: Iterable[Any]) -> np.ndarray:
        try:
            return np.asarray([self._index[v] for v in vertices], dtype=np.int64)
        except KeyError as exc:
            raise InvalidHandleError(f"vertex {exc.args[0]!r} is not in the graph") from exc

    def _single_source(self, i: int) -> dict[Any, float]:
        return nx.single_source_dijkstra_path_length(self._graph, self._nodes[i], weight="weight")

    def _dist(self, i: int, j: int) -> float:
        lengths = self._sssp(i)
        target = self._nodes[j]
        if target not in lengths:
            raise UnreachableError(self._nodes[i], target)
        return float(lengths[target])

    def _pairwise(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        out = np.zeros((rows.size, cols.size))
        if cols.size == 0:
            return out
        # Graph distances are symmetric; iterate over the shorter side's trees.
        if cols.size < rows.size:
            return self._pairwise(cols, rows).T
        targets = [self._nodes[j] for j in cols]
        for a, i in enumerate(rows):
            lengths = self._sssp(int(i))
            for b, target in enumerate(targets):
                if target not in lengths:
                    raise UnreachableError(self._nodes[i], target)
                out[a, b] = lengths[target]
        return out

    def check_connected(self, handles: Iterable[int]) -> None:
        """Raise :class:`UnreachableError` unless all handles share one component."""

        arr = self.check_handles(handles)
        if arr.size < 2:
            return
        reached = self._sssp(int(arr[0]))
        for j in arr[1:]:
            if self._nodes[j] not in reached:
                raise UnreachableError(self._nodes[arr[0]], self._nodes[j])

    def extend(self, items: Sequence[Any]) -> tuple["GraphBackend", np.ndarray]:
        return self, self.handles_of(items)

    def sample_items(
        self, rng: np.random.Generator, count: int, near: Sequence[int] | None = None
    ) -> list[Any]:
        anchor = self._nodes[int(self._near(near)[0])]
        # Only the anchor's component is reachable from the data.
        component = sorted(nx.node_connected_component(self._graph, anchor))
        picks = rng.integers(0, len(component), size=count)
        return [component[i] for i in picks]

    def perturb(self, handles: Sequence[int], scale: float, rng: np.random.Generator) -> list[Any]:
        out = []
        for h in self.check_handles(handles):
            node = self._nodes[h]
            options = [node, *sorted(self._graph.neighbors(node))]
            out.append(options[int(rng.integers(0, len(options)))])
        return out

    def default_sdim(self, settings: Settings | None = None) -> float:
        return float(resolve_settings(settings).graph_sdim)

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), "edges": self._graph.number_of_edges()}


class WassersteinBackend(MetricBackend):
    """l-point tuples of R^d under the p-Wasserstein distance."""

    kind = BackendKind.WASSERSTEIN

    def __init__(self, tuples: Sequence[Sequence[Sequence[float]]] | np.ndarray, p: float = 1.0) -> None:
        try:
            arr = np.array(tuples, dtype=float)
        except ValueError as exc:
            raise TupleLengthError("all tuples must hold the same number of d-vectors") from exc
        if arr.ndim != 3 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise TupleLengthError(f"expected an (n, l, d) tuple table, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tuple coordinates must be finite.")
        if p < 1:
            raise ValueError("the Wasserstein power p must be >= 1")
        arr.setflags(write=False)
        self._tuples = arr
        self._p = float(p)

    @property
    def size(self) -> int:
        return int(self._tuples.shape[0])

    @property
    def ell(self) -> int:
        return int(self._tuples.shape[1])

    @property
    def dim(self) -> int:
        return int(self._tuples.shape[2])

    @property
    def p(self) -> float:
        return self._p

    @property
    def tuples(self) -> np.ndarray:
        return self._tuples

    def _dist(self, i: int, j: int) -> float:
        return wasserstein_distance(self._tuples[i], self._tuples[j], self._p)

    def extend(self, items: Sequence[Any]) -> tuple["WassersteinBackend", np.ndarray]:
        extra = np.asarray(items, dtype=float).reshape(-1, self.ell, self.dim)
        backend = WassersteinBackend(np.concatenate([self._tuples, extra]), self._p)
        return backend, np.arange(self.size, self.size + extra.shape[0], dtype=np.int64)

    def sample_items(
        self, rng: np.random.Generator, count: int, near: Sequence[int] | None = None
    ) -> list[np.ndarray]:
        flat = self._tuples[self._near(near)].reshape(-1, self.dim)
        low, high = flat.min(axis=0), flat.max(axis=0)
        return list(rng.uniform(low, high, size=(count, self.ell, self.dim)))

    def perturb(self, handles: Sequence[int], scale: float, rng: np.random.Generator) -> list[np.ndarray]:
        base = self._tuples[self.check_handles(handles)]
        return list(base + rng.normal(0.0, scale, size=base.shape))

    def default_sdim(self, settings: Settings | None = None) -> float:
        # Euclidean sdim d+1, lifted to l-tuples as (sdim + 1) * l.
        return float((self.dim + 2) * self.ell)

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), "l": self.ell, "d": self.dim, "p": self._p}


class FrechetBackend(MetricBackend):
    """Polylines in R^d under the discrete Frechet distance."""

    kind = BackendKind.FRECHET

    def __init__(self, curves: Sequence[Sequence[Sequence[float]]], max_length: int | None = None) -> None:
        stored = []
        dim = None
        for index, curve in enumerate(curves):
            arr = np.array(curve, dtype=float)
            if arr.ndim != 2 or arr.shape[0] == 0:
                raise ValueError(f"curve {index} must be a nonempty list of d-vectors")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise ValueError(f"curve {index} has dimension {arr.shape[1]}, expected {dim}")
            if max_length is not None and arr.shape[0] > max_length:
                raise ValueError(f"curve {index} has {arr.shape[0]} vertices, more than {max_length}")
            arr.setflags(write=False)
            stored.append(arr)
        if not stored:
            raise ValueError("at least one curve is required")
        self._curves: tuple[np.ndarray, ...] = tuple(stored)
        self._dim = int(dim)
        self._max_length = max(c.shape[0] for c in stored)

    @property
    def size(self) -> int:
        return len(self._curves)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def max_length(self) -> int:
        return self._max_length

    @property
    def curves(self) -> tuple[np.ndarray, ...]:
        return self._curves

    def _dist(self, i: int, j: int) -> float:
        return discrete_frechet(self._curves[i], self._curves[j])

    def extend(self, items: Sequence[Any]) -> tuple["FrechetBackend", np.ndarray]:
        backend = FrechetBackend([*self._curves, *items])
        return backend, np.arange(self.size, backend.size, dtype=np.int64)

    def sample_items(
        self, rng: np.random.Generator, count: int, near: Sequence[int] | None = None
    ) -> list[np.ndarray]:
        chosen = [self._curves[h] for h in self._near(near)]
        flat = np.vstack(chosen)
        low, high = flat.min(axis=0), flat.max(axis=0)
        length = int(np.median([c.shape[0] for c in chosen]))
        return [rng.uniform(low, high, size=(length, self._dim)) for _ in range(count)]

    def perturb(self, handles: Sequence[int], scale: float, rng: np.random.Generator) -> list[np.ndarray]:
        return [
            self._curves[h] + rng.normal(0.0, scale, size=self._curves[h].shape)
            for h in self.check_handles(handles)
        ]

    def default_sdim(self, settings: Settings | None = None) -> float:
        cfg = resolve_settings(settings)
        m = self._max_length
        ell = cfg.frechet_center_length or m
        return float(cfg.frechet_sdim_constant * self._dim**2 * ell**2 * max(1.0, math.log2(m)))

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), "d": self._dim, "m": self._max_length}


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """Weighted handles into a metric backend, optionally carrying group labels."""

    backend: MetricBackend
    handles: np.ndarray
    weights: np.ndarray
    group_labels: tuple[frozenset[str], ...] | None = None

    def __post_init__(self) -> None:
        handles = self.backend.check_handles(self.handles).copy()
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.shape != handles.shape:
            raise ValueError(f"{handles.size} handles but {weights.size} weights")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if handles.size == 0 or weights.sum() <= 0:
            raise ZeroWeightError("a weighted point set needs positive total weight")
        labels = self.group_labels
        if labels is not None:
            labels = tuple(frozenset(str(g) for g in entry) for entry in labels)
            if len(labels) != handles.size:
                raise ValueError(f"{len(labels)} label sets for {handles.size} points")
        handles.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "handles", handles)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "group_labels", labels)

    @classmethod
    def from_backend(
        cls,
        backend: MetricBackend,
        weights: Sequence[float] | np.ndarray | None = None,
        group_labels: Sequence[Iterable[str]] | None = None,
    ) -> "WeightedPointSet":
        """Every element of ``backend`` as a point, unit weights by default."""

        handles = np.arange(backend.size, dtype=np.int64)
        w = np.ones(backend.size) if weights is None else weights
        labels = None if group_labels is None else tuple(frozenset(g) for g in group_labels)
        return cls(backend, handles, w, labels)

    def __len__(self) -> int:
        return int(self.handles.size)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def subset(self, positions: Sequence[int] | np.ndarray) -> "WeightedPointSet":
        idx = np.asarray(positions, dtype=np.int64)
        labels = None if self.group_labels is None else tuple(self.group_labels[i] for i in idx)
        return WeightedPointSet(self.backend, self.handles[idx], self.weights[idx], labels)

    def with_weights(self, weights: Sequence[float] | np.ndarray) -> "WeightedPointSet":
        return WeightedPointSet(self.backend, self.handles, weights, self.group_labels)

    def on(self, backend: MetricBackend) -> "WeightedPointSet":
        """The same points addressed through an extended backend."""

        return WeightedPointSet(backend, self.handles, self.weights, self.group_labels)

    def distances_to(self, center: int) -> np.ndarray:
        return self.backend.pairwise(self.handles, [center])[:, 0]


def _center_array(centers: Iterable[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(list(centers) if not isinstance(centers, np.ndarray) else centers).reshape(-1)
    if arr.size == 0:
        raise EmptyCenterSetError("cost requires at least one center")
    return arr


def nearest_centers(P: WeightedPointSet, centers: Iterable[int] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest center per point (ties to the lowest index) and its distance."""

    dists = P.backend.pairwise(P.handles, _center_array(centers))
    labels = np.argmin(dists, axis=1)
    return labels, dists[np.arange(len(P)), labels]


def cost_z(P: WeightedPointSet, centers: Iterable[int] | np.ndarray, z: float = 1.0) -> float:
    """Weighted sum of z-th powers of nearest-center distances."""

    _, dists = nearest_centers(P, centers)
    return float(np.dot(P.weights, dists**z))


def ring_index(d: float, boundary_tol: float = 0.0) -> int | float:
    """The unique i with 2^(i-1) < d <= 2^i, or NEG_INFINITY for d = 0.

    With ``boundary_tol`` > 0, a distance within ``boundary_tol * 2^i`` above the
    lower boundary is assigned to the lower ring.
    """

    if math.isnan(d) or d < 0 or math.isinf(d):
        raise ValueError(f"ring_index needs a finite nonnegative distance, got {d!r}")
    if d == 0:
        return NEG_INFINITY
    mantissa, exponent = math.frexp(d)
    index = exponent - 1 if mantissa == 0.5 else exponent
    if boundary_tol > 0 and d - math.ldexp(1.0, index - 1) <= boundary_tol * math.ldexp(1.0, index):
        index -= 1
    return index


def ring_indices(dists: np.ndarray, boundary_tol: float = 0.0) -> np.ndarray:
    """Vectorised :func:`ring_index`; zero distances map to ``NEG_INF_RING``."""

    d = np.asarray(dists, dtype=float)
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValueError("ring indices need finite nonnegative distances")
    mantissa, exponent = np.frexp(d)
    index = np.where(mantissa == 0.5, exponent - 1, exponent).astype(np.int64)
    if boundary_tol > 0:
        snap = (d > 0) & (d - np.ldexp(1.0, index - 1) <= boundary_tol * np.ldexp(1.0, index))
        index = np.where(snap, index - 1, index)
    return np.where(d == 0, NEG_INF_RING, index)


def avg_radius(P: WeightedPointSet, center: int, z: float = 1.0) -> float:
    """(cost_z(P, {c}) / w(P))^(1/z)."""

    total = P.total_weight
    if total <= 0:
        raise ZeroWeightError("average radius of a massless set")
    return float((cost_z(P, [center], z) / total) ** (1.0 / z))
