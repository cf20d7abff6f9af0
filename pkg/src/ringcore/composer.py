"""End-to-end coreset builders: general, fair and Wasserstein barycenter."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bicriteria import BicriteriaResult, Cluster, bicriteria_approx, cluster_partition
from .config import Settings, resolve_settings
from .data_models import (
    BudgetForm,
    BudgetMode,
    ClusteringParams,
    CoresetMode,
    Provenance,
    SizeAccounting,
)
from .exceptions import ConfigurationError, MissingLabelsError, NumericalError
from .logging_utils import configure_logging
from .metric_core import WassersteinBackend, WeightedPointSet
from .randomness import rng_for
from .ring_coreset import SampleBudget, sample_budget, uniform_ring_coreset
from .ring_decomp import CoresetEntry, Ring, decompose, reduce_k1, reduction_params

LOGGER = configure_logging(__name__)

SAMPLE_STREAM = 2


@dataclass(frozen=True)
class CoresetResult:
    points: WeightedPointSet
    indices: np.ndarray
    provenance: tuple[Provenance, ...]
    mode: CoresetMode
    params: ClusteringParams
    alpha_used: float
    working_eps: float
    accounting: SizeAccounting
    centers: np.ndarray
    builder: str = "general"
    fair_parts: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def weights(self) -> np.ndarray:
        return self.points.weights

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "points": [int(h) for h in self.points.handles],
            "indices": [int(i) for i in self.indices],
            "weights": [float(w) for w in self.points.weights],
            "provenance": [str(p) for p in self.provenance],
            "mode": str(self.mode),
            "builder": self.builder,
            "params": self.params.model_dump(),
            "alpha_used": self.alpha_used,
            "working_eps": self.working_eps,
            "centers": [int(c) for c in self.centers],
            "backend": self.points.backend.describe(),
            "size_accounting": self.accounting.model_dump(),
        }
        if self.points.group_labels is not None:
            payload["groups"] = [sorted(labels) for labels in self.points.group_labels]
        if self.fair_parts:
            payload["fair_parts"] = self.fair_parts
        return payload


@dataclass(frozen=True)
class FairPartition:
    """Points split by their exact set of group labels."""

    signatures: tuple[str, ...]
    parts: dict[str, np.ndarray]

    @property
    def delta(self) -> int:
        return len(self.signatures)


@dataclass
class _ClusterOutput:
    entries: list[CoresetEntry]
    center_mass: int = 0
    groups: int = 0
    two_point: int = 0
    k1_points: int = 0
    k1_paths: int = 0
    rings: int = 0
    capped: int = 0
    sampled: int = 0


def signature(labels: frozenset[str]) -> str:
    return ";".join(sorted(labels))


def fair_partition(P: WeightedPointSet) -> FairPartition:
    """Parts keyed by label signature, in order of first appearance."""

    if P.group_labels is None:
        raise MissingLabelsError("fair coresets need per-point group labels")
    buckets: dict[str, list[int]] = {}
    for position, labels in enumerate(P.group_labels):
        buckets.setdefault(signature(labels), []).append(position)
    parts = {key: np.asarray(value, dtype=np.int64) for key, value in buckets.items()}
    return FairPartition(tuple(parts), parts)


def _sample_rings(
    cluster: WeightedPointSet,
    center: int,
    rings: tuple[Ring, ...],
    budget: SampleBudget,
    seed: int,
    cluster_index: int,
    out: _ClusterOutput,
) -> None:
    for order, ring in enumerate(rings):
        if ring.weight <= 0:
            continue
        sample = uniform_ring_coreset(
            cluster.subset(ring.positions),
            center,
            ring.radius,
            budget,
            rng_for(seed, SAMPLE_STREAM, cluster_index, order),
        )
        out.entries.extend(
            (int(ring.positions[p]), float(w), Provenance.RING_SAMPLE)
            for p, w in zip(sample.positions, sample.weights)
        )
        out.rings += 1
        out.capped += budget.capped(len(ring.positions))
        out.sampled += int(sample.positions.size)


def _reduce_cluster(
    cluster: Cluster, params: ClusteringParams, budget: SampleBudget, use_k1: bool
) -> _ClusterOutput:
    points, center = cluster.points, cluster.center
    if use_k1:
        red = reduce_k1(points, center, params)
        out = _ClusterOutput(red.coreset_points(), k1_paths=1)
        out.k1_points = len(out.entries)
        rings = red.w_rings
    else:
        dec = decompose(points, center, reduction_params(points, center, params))
        out = _ClusterOutput(dec.coreset_points(), groups=len(dec.groups))
        out.center_mass = sum(1 for e in out.entries if e[2] is Provenance.CENTER_MASS)
        out.two_point = len(out.entries) - out.center_mass
        rings = dec.heavy_rings
    _sample_rings(points, center, rings, budget, params.seed, cluster.index, out)
    # Map positions within the cluster back to the input.
    out.entries = [(int(cluster.positions[p]), w, tag) for p, w, tag in out.entries]
    LOGGER.debug(
        "Cluster %d: %d points -> %d coreset entries (%d rings sampled)",
        cluster.index,
        len(points),
        len(out.entries),
        out.rings,
    )
    return out


def _assemble(
    P: WeightedPointSet,
    outputs: list[_ClusterOutput],
    *,
    params: ClusteringParams,
    mode: CoresetMode,
    budget: SampleBudget,
    alpha: float,
    working_eps: float,
    centers: np.ndarray,
    builder: str,
) -> CoresetResult:
    merged: dict[int, tuple[float, Provenance]] = {}
    for out in outputs:
        for position, weight, tag in out.entries:
            if position in merged:
                prior, prior_tag = merged[position]
                merged[position] = (prior + weight, prior_tag)
            else:
                merged[position] = (weight, tag)
    positions = np.asarray(sorted(merged), dtype=np.int64)
    weights = np.asarray([merged[p][0] for p in positions], dtype=float)
    provenance = tuple(merged[p][1] for p in positions)
    points = P.subset(positions).with_weights(weights)

    total, kept = P.total_weight, points.total_weight
    if abs(total - kept) > 1e-9 * total:
        raise NumericalError(f"coreset weighs {kept!r}, input weighs {total!r}")

    center_mass = sum(o.center_mass for o in outputs)
    groups = sum(o.groups for o in outputs)
    k1_paths = sum(o.k1_paths for o in outputs)
    capped = sum(o.capped for o in outputs)
    size_bound = center_mass + 2 * groups + 3 * k1_paths + capped
    accounting = SizeAccounting(
        clusters=len(outputs),
        center_mass=center_mass,
        groups_total=groups,
        two_point_points=sum(o.two_point for o in outputs),
        k1_points=sum(o.k1_points for o in outputs),
        rings=sum(o.rings for o in outputs),
        ring_budget=budget.m,
        ring_budgets_capped=capped,
        ring_sample_points=sum(o.sampled for o in outputs),
        size=len(points),
        size_bound=size_bound,
        within_bound=len(points) <= size_bound,
    )
    if not accounting.within_bound:
        raise NumericalError(f"coreset size {len(points)} exceeds its accounting bound {size_bound}")
    return CoresetResult(
        points=points,
        indices=positions,
        provenance=provenance,
        mode=mode,
        params=params,
        alpha_used=alpha,
        working_eps=working_eps,
        accounting=accounting,
        centers=np.asarray(centers, dtype=np.int64),
        builder=builder,
    )


def _budget_for(
    P: WeightedPointSet,
    params: ClusteringParams,
    mode: CoresetMode,
    cfg: Settings,
    form: BudgetForm | None,
    sdim: float | None,
) -> SampleBudget:
    if mode is CoresetMode.ASSIGNMENT_PRESERVING:
        return sample_budget(params, BudgetMode.ASSIGNMENT_PRESERVING, settings=cfg, form=form)
    bound = sdim if sdim is not None else P.backend.default_sdim(cfg)
    return sample_budget(params, BudgetMode.UNCONSTRAINED, bound, settings=cfg)


def build_coreset(
    P: WeightedPointSet,
    params: ClusteringParams,
    mode: CoresetMode = CoresetMode.VANILLA,
    settings: Settings | None = None,
    budget_form: BudgetForm | None = None,
    sdim: float | None = None,
    bicriteria: BicriteriaResult | None = None,
) -> CoresetResult:
    """bicriteria -> per-cluster reduction -> ring sampling -> union.

    Every stage runs at the working error ``eps / (alpha + 1)``.
    """

    cfg = resolve_settings(settings)
    mode = CoresetMode(mode)
    bic = bicriteria or bicriteria_approx(P, params, cfg)
    clusters = cluster_partition(P, bic)
    alpha = bic.alpha_budget
    working_eps = params.eps / (alpha + 1.0)
    working = params.model_copy(update={"eps": working_eps})
    budget = _budget_for(P, working, mode, cfg, budget_form, sdim)
    use_k1 = params.k == 1 and len(clusters) == 1

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        outputs = list(pool.map(lambda c: _reduce_cluster(c, working, budget, use_k1), clusters))

    result = _assemble(
        P,
        outputs,
        params=params,
        mode=mode,
        budget=budget,
        alpha=alpha,
        working_eps=working_eps,
        centers=bic.centers,
        builder="general",
    )
    LOGGER.info(
        "Built %s coreset: %d of %d points (ring budget %d, %d rings, %d groups)",
        mode,
        result.size,
        len(P),
        budget.m,
        result.accounting.rings,
        result.accounting.groups_total,
    )
    return result


def build_fair_coreset(
    P: WeightedPointSet,
    params: ClusteringParams,
    settings: Settings | None = None,
    budget_form: BudgetForm | None = None,
) -> CoresetResult:
    """Assignment-preserving coreset per label signature, unioned."""

    cfg = resolve_settings(settings)
    partition = fair_partition(P)
    indices: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    provenance: list[Provenance] = []
    centers: list[np.ndarray] = []
    accounts: list[SizeAccounting] = []
    summary: dict[str, dict[str, float]] = {}
    alpha = working_eps = 0.0
    for key in partition.signatures:
        positions = partition.parts[key]
        part = P.subset(positions)
        built = build_coreset(part, params, CoresetMode.ASSIGNMENT_PRESERVING, cfg, budget_form)
        indices.append(positions[built.indices])
        weights.append(built.weights)
        provenance.extend(built.provenance)
        centers.append(built.centers)
        accounts.append(built.accounting)
        alpha, working_eps = built.alpha_used, built.working_eps
        summary[key] = {"points": float(len(part)), "weight": part.total_weight, "coreset_weight": built.points.total_weight}

    all_indices = np.concatenate(indices)
    order = np.argsort(all_indices, kind="stable")
    all_weights = np.concatenate(weights)[order]
    points = P.subset(all_indices[order]).with_weights(all_weights)
    size_bound = sum(a.size_bound for a in accounts)
    accounting = SizeAccounting(
        clusters=sum(a.clusters for a in accounts),
        center_mass=sum(a.center_mass for a in accounts),
        groups_total=sum(a.groups_total for a in accounts),
        two_point_points=sum(a.two_point_points for a in accounts),
        k1_points=sum(a.k1_points for a in accounts),
        rings=sum(a.rings for a in accounts),
        ring_budget=max(a.ring_budget for a in accounts),
        ring_budgets_capped=sum(a.ring_budgets_capped for a in accounts),
        ring_sample_points=sum(a.ring_sample_points for a in accounts),
        size=len(points),
        size_bound=size_bound,
        within_bound=len(points) <= size_bound,
    )
    LOGGER.info("Built fair coreset over %d parts: %d of %d points", partition.delta, len(points), len(P))
    return CoresetResult(
        points=points,
        indices=all_indices[order],
        provenance=tuple(provenance[i] for i in order),
        mode=CoresetMode.ASSIGNMENT_PRESERVING,
        params=params,
        alpha_used=alpha,
        working_eps=working_eps,
        accounting=accounting,
        centers=np.concatenate(centers),
        builder="fair",
        fair_parts=summary,
    )


def barycenter_center(P: WeightedPointSet, params: ClusteringParams, settings: Settings | None = None) -> int:
    """Best of ``3 * ceil(log2(1/delta))`` seeded 1-median candidates."""

    candidates = 3 * max(1, math.ceil(math.log2(1.0 / params.delta)))
    one_median = params.model_copy(update={"k": 1, "z": 1.0})
    return int(bicriteria_approx(P, one_median, settings, repetitions=candidates).centers[0])


def build_barycenter_coreset(
    P: WeightedPointSet,
    params: ClusteringParams,
    settings: Settings | None = None,
    sdim: float | None = None,
) -> CoresetResult:
    """k = 1 reduction around an approximate Wasserstein 1-median, W-rings sampled."""

    if not isinstance(P.backend, WassersteinBackend):
        raise ConfigurationError("barycenter coresets need a Wasserstein tuple backend")
    if params.k != 1:
        raise ConfigurationError("barycenter coresets are defined for k = 1")
    cfg = resolve_settings(settings)
    center = barycenter_center(P, params, cfg)
    bound = sdim if sdim is not None else P.backend.default_sdim(cfg)
    budget = sample_budget(params, BudgetMode.UNCONSTRAINED, bound, settings=cfg)
    cluster = Cluster(0, center, np.arange(len(P), dtype=np.int64), P)
    output = _reduce_cluster(cluster, params, budget, use_k1=True)
    result = _assemble(
        P,
        [output],
        params=params,
        mode=CoresetMode.VANILLA,
        budget=budget,
        alpha=0.0,
        working_eps=params.eps,
        centers=np.asarray([center]),
        builder="barycenter",
    )
    LOGGER.info("Built barycenter coreset: %d of %d tuples (ring budget %d)", result.size, len(P), budget.m)
    return result
