"""Uniform-sampling coresets on ring datasets and their sample budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Settings, resolve_settings
from .data_models import BudgetForm, BudgetMode, ClusteringParams
from .exceptions import RingMembershipError
from .logging_utils import configure_logging
from .metric_core import WeightedPointSet
from .randomness import rng_for

LOGGER = configure_logging(__name__)

RING_SLACK = 1e-9


@dataclass(frozen=True)
class SampleBudget:
    mode: BudgetMode
    m: int
    k: int
    z: float
    eps: float
    delta: float
    sdim: float | None
    constant: float
    form: BudgetForm | None

    def capped(self, size: int) -> int:
        return min(self.m, size)


@dataclass(frozen=True)
class RingSample:
    """Sampled positions into the ring, their weights, and the budget actually used."""

    positions: np.ndarray
    weights: np.ndarray
    points: WeightedPointSet
    m: int
    whole_ring: bool


def _log_floor(x: float) -> float:
    return max(1.0, math.log2(x))


def sample_budget(
    params: ClusteringParams,
    mode: BudgetMode,
    sdim_bound: float | None = None,
    settings: Settings | None = None,
    form: BudgetForm | None = None,
) -> SampleBudget:
    """Uncapped per-ring sample count for the given mode.

    assignment_preserving / eps5:  c0 * k / eps^5 * log2(k/eps) * ceil(log2(1/delta))
    assignment_preserving / eps3:  c0 * k / eps^3 * log2(k/eps)^2 * ceil(log2(1/delta))
    unconstrained:                 c1 * k * sdim / eps^2 * log2(1/eps) * ceil(log2(1/delta))
    """

    cfg = resolve_settings(settings)
    k, eps = params.k, params.eps
    log_delta = max(1, math.ceil(math.log2(1.0 / params.delta)))
    if mode is BudgetMode.ASSIGNMENT_PRESERVING:
        chosen = BudgetForm(form or cfg.budget_form)
        if chosen is BudgetForm.EPS5:
            raw = cfg.budget_c0 * k / eps**5 * _log_floor(k / eps) * log_delta
        else:
            raw = cfg.budget_c0 * k / eps**3 * _log_floor(k / eps) ** 2 * log_delta
        constant, sdim = cfg.budget_c0, None
    else:
        if sdim_bound is None or sdim_bound <= 0:
            raise ValueError("unconstrained budgets need a positive sdim bound")
        chosen = None
        raw = cfg.budget_c1 * k * sdim_bound / eps**2 * _log_floor(1.0 / eps) * log_delta
        constant, sdim = cfg.budget_c1, float(sdim_bound)
    return SampleBudget(
        mode=mode,
        m=max(1, math.ceil(raw)),
        k=k,
        z=params.z,
        eps=eps,
        delta=params.delta,
        sdim=sdim,
        constant=constant,
        form=chosen,
    )


def check_ring(R: WeightedPointSet, center: int, inner_radius: float) -> np.ndarray:
    distances = R.distances_to(center)
    low = inner_radius * (1.0 - RING_SLACK)
    high = 2.0 * inner_radius * (1.0 + RING_SLACK)
    outside = np.flatnonzero((distances <= low) | (distances > high))
    if outside.size:
        raise RingMembershipError(
            f"not a ring dataset: {outside.size} points outside ({inner_radius!r}, {2 * inner_radius!r}]"
        )
    return distances


def uniform_ring_coreset(
    R: WeightedPointSet,
    center: int,
    inner_radius: float,
    budget: SampleBudget,
    seed: int | np.random.Generator = 0,
) -> RingSample:
    """Draw m points with replacement, probability proportional to weight.

    Duplicates are merged; each draw carries ``w(R)/m`` and the last kept point
    absorbs rounding so the sample weighs exactly ``w(R)``.
    """

    check_ring(R, center, inner_radius)
    n = len(R)
    if budget.m >= n:
        positions = np.arange(n, dtype=np.int64)
        return RingSample(positions, R.weights.copy(), R, n, True)

    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    total = R.total_weight
    draws = rng.choice(n, size=budget.m, replace=True, p=R.weights / total)
    counts = np.bincount(draws, minlength=n)
    positions = np.flatnonzero(counts)
    weights = counts[positions] * (total / budget.m)
    weights[-1] = total - weights[:-1].sum()
    points = R.subset(positions).with_weights(weights)
    return RingSample(positions, weights, points, budget.m, False)
