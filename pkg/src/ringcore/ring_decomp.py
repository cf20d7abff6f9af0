"""Per-cluster ring decomposition, heavy marking, grouping and two-point coresets.

A cluster P with center c is cut into dyadic rings ``2^(i-1) < dist(x, c) <= 2^i``.
Rings whose cost to c reaches ``err`` are *heavy* and kept for uniform sampling;
the remaining rings are merged into groups of cost at most ``err`` and each group
is replaced by two weighted points that preserve its mass and its cost to c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np

from .data_models import ClusteringParams, K1StructuralReport, Provenance, StructuralReport
from .exceptions import NumericalError
from .logging_utils import configure_logging
from .metric_core import (
    NEG_INF_RING,
    RING_BOUNDARY_TOL,
    WeightedPointSet,
    avg_radius,
    cost_z,
    ring_indices,
)

LOGGER = configure_logging(__name__)

LAMBDA_CLAMP = 1e-12

CoresetEntry = tuple[int, float, Provenance]


@dataclass(frozen=True)
class ReductionParams:
    t: int
    err: float
    cost: float
    k: int
    z: float
    eps: float


@dataclass(frozen=True)
class Ring:
    index: int
    positions: np.ndarray
    weight: float
    cost: float
    heavy: bool

    @property
    def radius(self) -> float:
        """Inner radius 2^(i-1); the ring is (radius, 2 * radius]."""

        return math.ldexp(1.0, self.index - 1)


@dataclass(frozen=True)
class Group:
    lo: int
    hi: int
    rings: tuple[int, ...]
    positions: np.ndarray
    weight: float
    cost: float


@dataclass(frozen=True)
class TwoPointCoreset:
    p_close: int
    p_far: int
    w_close: float
    w_far: float
    d_close: float
    d_far: float

    @property
    def degenerate(self) -> bool:
        return self.p_close == self.p_far

    def points(self) -> list[tuple[int, float]]:
        if self.degenerate:
            total = self.w_close + self.w_far
            return [(self.p_close, total)] if total > 0 else []
        return [(p, w) for p, w in ((self.p_close, self.w_close), (self.p_far, self.w_far)) if w > 0]


@dataclass(frozen=True)
class RingDecomposition:
    center: int
    params: ReductionParams
    n_points: int
    rings: tuple[Ring, ...]
    groups: tuple[Group, ...]
    two_point: tuple[TwoPointCoreset, ...]
    buckets: int
    center_positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    center_weight: float = 0.0

    @property
    def heavy_rings(self) -> tuple[Ring, ...]:
        return tuple(r for r in self.rings if r.heavy)

    @property
    def heavy_marks(self) -> list[int]:
        return [r.index for r in self.rings if r.heavy]

    @property
    def w_positions(self) -> np.ndarray:
        parts = [r.positions for r in self.heavy_rings]
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)

    @property
    def z_positions(self) -> np.ndarray:
        parts = [r.positions for r in self.rings if not r.heavy] + [self.center_positions]
        return np.sort(np.concatenate(parts))

    def coreset_points(self) -> list[CoresetEntry]:
        """Weighted stand-ins for Z: the center-mass point and every group's two points."""

        out: list[CoresetEntry] = []
        if self.center_positions.size:
            out.append((int(self.center_positions[0]), self.center_weight, Provenance.CENTER_MASS))
        for tp in self.two_point:
            out.extend((p, w, Provenance.TWO_POINT) for p, w in tp.points())
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "center": int(self.center),
            "t": self.params.t,
            "err": self.params.err,
            "cost": self.params.cost,
            "rings": [
                {
                    "index": r.index,
                    "radius": r.radius,
                    "points": int(r.positions.size),
                    "weight": r.weight,
                    "cost": r.cost,
                    "heavy": r.heavy,
                }
                for r in self.rings
            ],
            "heavy_marks": self.heavy_marks,
            "buckets": self.buckets,
            "groups": [
                {"lo": g.lo, "hi": g.hi, "points": int(g.positions.size), "weight": g.weight, "cost": g.cost}
                for g in self.groups
            ],
            "two_point": [
                {"p_close": tp.p_close, "p_far": tp.p_far, "w_close": tp.w_close, "w_far": tp.w_far}
                for tp in self.two_point
            ],
            "center_mass": {
                "points": int(self.center_positions.size),
                "weight": self.center_weight,
            },
        }


@dataclass(frozen=True)
class K1Reduction:
    center: int
    radius: float
    close_threshold: float
    far_threshold: float
    w_rings: tuple[Ring, ...]
    close_positions: np.ndarray
    far_positions: np.ndarray
    close_point: tuple[int, float] | None
    far_coreset: TwoPointCoreset | None

    def coreset_points(self) -> list[CoresetEntry]:
        out: list[CoresetEntry] = []
        if self.close_point is not None:
            out.append((self.close_point[0], self.close_point[1], Provenance.CENTER_MASS))
        if self.far_coreset is not None:
            out.extend((p, w, Provenance.TWO_POINT) for p, w in self.far_coreset.points())
        return out

    @property
    def w_positions(self) -> np.ndarray:
        parts = [r.positions for r in self.w_rings]
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)


def reduction_params(
    P: WeightedPointSet, center: int, params: ClusteringParams, cost: float | None = None
) -> ReductionParams:
    """``t = ceil(2 + log2(24zk/eps))`` and ``err = (eps/6z)^z * cost / (k t)``."""

    z, k, eps = params.z, params.k, params.eps
    total = cost_z(P, [center], z) if cost is None else float(cost)
    t = math.ceil(2.0 + math.log2(24.0 * z * k / eps))
    err = (eps / (6.0 * z)) ** z * total / (k * t)
    return ReductionParams(t=t, err=err, cost=total, k=k, z=z, eps=eps)


def two_point_coreset(
    positions: np.ndarray, distances: np.ndarray, weights: np.ndarray, z: float
) -> TwoPointCoreset:
    """Closest and furthest point reweighted so mass and cost to the center are kept.

    Ties resolve to the lowest position.
    """

    order = np.argsort(positions, kind="stable")
    positions, distances, weights = positions[order], distances[order], weights[order]
    close, far = int(np.argmin(distances)), int(np.argmax(distances))
    total = float(weights.sum())
    dz = distances**z
    span = dz[far] - dz[close]
    if span <= 0:
        return TwoPointCoreset(
            int(positions[close]), int(positions[close]), total, 0.0,
            float(distances[close]), float(distances[close]),
        )
    lam = (dz[far] - dz) / span
    if lam.min() < -LAMBDA_CLAMP or lam.max() > 1.0 + LAMBDA_CLAMP:
        raise NumericalError(f"convex coefficient outside [0, 1]: {lam.min()!r}..{lam.max()!r}")
    if lam.min() < 0.0 or lam.max() > 1.0:
        LOGGER.warning("Clamping convex coefficients %r..%r into [0, 1]", float(lam.min()), float(lam.max()))
        lam = np.clip(lam, 0.0, 1.0)
    w_close = min(float(np.dot(lam, weights)), total)
    return TwoPointCoreset(
        p_close=int(positions[close]),
        p_far=int(positions[far]),
        w_close=w_close,
        w_far=total - w_close,
        d_close=float(distances[close]),
        d_far=float(distances[far]),
    )


def _rings(
    indices: np.ndarray, weights: np.ndarray, point_costs: np.ndarray, err: float, mark: bool
) -> list[Ring]:
    out = []
    valid = indices != NEG_INF_RING
    for i in np.unique(indices[valid]):
        members = np.flatnonzero(indices == i)
        cost = float(point_costs[members].sum())
        weight = float(weights[members].sum())
        # Massless rings carry nothing to sample.
        heavy = weight > 0 and (mark or cost >= err)
        out.append(Ring(int(i), members, weight, cost, heavy))
    return out


def _group_bucket(bucket: list[Ring], err: float) -> list[list[Ring]]:
    groups: list[list[Ring]] = []
    current: list[Ring] = []
    running = 0.0
    for ring in bucket:
        if current and running + ring.cost > err:
            groups.append(current)
            current, running = [], 0.0
        current.append(ring)
        running += ring.cost
    if current:
        groups.append(current)
    return groups


def decompose(
    P: WeightedPointSet, center: int, rp: ReductionParams, boundary_tol: float = RING_BOUNDARY_TOL
) -> RingDecomposition:
    """Split P around ``center`` into heavy rings (W) and grouped light rings (Z)."""

    distances = P.distances_to(center)
    point_costs = P.weights * distances**rp.z
    at_center = np.flatnonzero(distances == 0)
    indices = ring_indices(distances, boundary_tol)
    rings = _rings(indices, P.weights, point_costs, rp.err, mark=False)

    buckets: list[list[Ring]] = []
    current: list[Ring] = []
    for ring in rings:
        if ring.heavy:
            if current:
                buckets.append(current)
            current = []
        else:
            current.append(ring)
    if current:
        buckets.append(current)

    groups: list[Group] = []
    two_point: list[TwoPointCoreset] = []
    for bucket in buckets:
        for members in _group_bucket(bucket, rp.err):
            positions = np.sort(np.concatenate([r.positions for r in members]))
            groups.append(
                Group(
                    lo=members[0].index,
                    hi=members[-1].index,
                    rings=tuple(r.index for r in members),
                    positions=positions,
                    weight=float(P.weights[positions].sum()),
                    cost=float(sum(r.cost for r in members)),
                )
            )
            two_point.append(two_point_coreset(positions, distances[positions], P.weights[positions], rp.z))

    dec = RingDecomposition(
        center=int(center),
        params=rp,
        n_points=len(P),
        rings=tuple(rings),
        groups=tuple(groups),
        two_point=tuple(two_point),
        buckets=len(buckets),
        center_positions=at_center,
        center_weight=float(P.weights[at_center].sum()),
    )
    LOGGER.debug(
        "Decomposed %d points around %d: %d rings (%d heavy), %d groups",
        len(P),
        center,
        len(rings),
        len(dec.heavy_rings),
        len(groups),
    )
    return dec


def k1_thresholds(radius: float, params: ClusteringParams) -> tuple[float, float]:
    """Close and far distance thresholds of the k = 1 reduction."""

    z, eps = params.z, params.eps
    return eps / (6.0 * z) * radius, 120.0 * z / eps**2 * radius


def reduce_k1(
    P: WeightedPointSet, center: int, params: ClusteringParams, boundary_tol: float = RING_BOUNDARY_TOL
) -> K1Reduction:
    """Keep the main band as dyadic rings; collapse the close and far parts to at most 3 points."""

    if params.k != 1:
        raise ValueError("reduce_k1 needs k = 1")
    radius = avg_radius(P, center, params.z)
    close_thr, far_thr = k1_thresholds(radius, params)
    distances = P.distances_to(center)
    close = np.flatnonzero((distances < close_thr) | (distances == 0))
    far = np.flatnonzero(distances > far_thr)
    main = np.setdiff1d(np.arange(len(P)), np.concatenate([close, far]), assume_unique=True)

    indices = np.full(len(P), NEG_INF_RING, dtype=np.int64)
    indices[main] = ring_indices(distances[main], boundary_tol)
    point_costs = P.weights * distances**params.z
    w_rings = tuple(_rings(indices, P.weights, point_costs, 0.0, mark=True))

    close_point = None
    if close.size:
        nearest = int(close[np.argmin(distances[close])])
        close_point = (nearest, float(P.weights[close].sum()))
    far_coreset = None
    if far.size:
        far_coreset = two_point_coreset(far, distances[far], P.weights[far], params.z)
    return K1Reduction(
        center=int(center),
        radius=radius,
        close_threshold=close_thr,
        far_threshold=far_thr,
        w_rings=w_rings,
        close_positions=close,
        far_positions=far,
        close_point=close_point,
        far_coreset=far_coreset,
    )


def count_bounds(dec: RingDecomposition, rp: ReductionParams) -> StructuralReport:
    """Heavy-ring and group counts against ``cost/err`` and ``2 cost/err + heavy + 1``."""

    heavy = len(dec.heavy_rings)
    if rp.err > 0:
        ratio = rp.cost / rp.err * (1.0 + 1e-9)
    else:
        ratio = 0.0 if rp.cost == 0 else math.inf
    heavy_bound = ratio
    group_bound = 2.0 * ratio + heavy + 1
    return StructuralReport(
        heavy_rings=heavy,
        buckets=dec.buckets,
        groups=len(dec.groups),
        coreset_points=len(dec.coreset_points()),
        heavy_bound=heavy_bound,
        group_bound=group_bound,
        heavy_ok=heavy <= heavy_bound,
        groups_ok=len(dec.groups) <= group_bound,
    )


def k1_ring_bound(params: ClusteringParams) -> int:
    return math.ceil(math.log2(240.0 * params.z / params.eps**2)) + 2


def count_bounds_k1(red: K1Reduction, params: ClusteringParams) -> K1StructuralReport:
    bound = k1_ring_bound(params)
    points = len(red.coreset_points())
    return K1StructuralReport(
        w_rings=len(red.w_rings),
        coreset_points=points,
        ring_bound=bound,
        rings_ok=len(red.w_rings) <= bound,
        size_ok=points <= 3,
    )


def iter_groups(dec: RingDecomposition) -> Iterator[tuple[Group, TwoPointCoreset]]:
    return zip(dec.groups, dec.two_point)
