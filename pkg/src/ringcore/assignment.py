"""Assignment constraints, fractional transport plans and the constrained clustering cost."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse
from scipy.optimize import linprog

from .config import Settings, resolve_settings
from .exceptions import EmptyCenterSetError, MassMismatchError, NumericalError
from .logging_utils import configure_logging
from .metric_core import WeightedPointSet, nearest_centers
from .randomness import rng_for

LOGGER = configure_logging(__name__)


class AssignmentConstraint(BaseModel):
    """Prescribed mass per center; pairs with a point set of equal total weight."""

    model_config = ConfigDict(frozen=True)

    centers: list[int] = Field(..., min_length=1)
    masses: list[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_masses(self) -> "AssignmentConstraint":
        if len(self.centers) != len(self.masses):
            raise ValueError(f"{len(self.centers)} centers but {len(self.masses)} masses")
        if any(not np.isfinite(m) or m < 0 for m in self.masses):
            raise ValueError("constraint masses must be finite and nonnegative")
        return self

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))


@dataclass(frozen=True)
class TransportPlan:
    """Sparse optimal plan: positions into the point set, indices into the center list."""

    point_index: np.ndarray
    center_index: np.ndarray
    mass: np.ndarray
    objective: float
    n_points: int
    n_centers: int
    solver: str

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_points, self.n_centers))
        np.add.at(out, (self.point_index, self.center_index), self.mass)
        return out

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.point_index, weights=self.mass, minlength=self.n_points)

    def column_sums(self) -> np.ndarray:
        return np.bincount(self.center_index, weights=self.mass, minlength=self.n_centers)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"point": self.point_index, "center": self.center_index, "mass": self.mass}
        )


class TransportationSimplex:
    """Dense transportation simplex: north-west corner start, MODI improvement.

    The entering cell is the most negative reduced cost; after a degenerate pivot the
    lowest-index negative cell is taken instead (Bland) until a pivot moves mass.
    """

    def __init__(self, cost: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> None:
        self.cost = np.asarray(cost, dtype=float)
        self.supply = np.asarray(supply, dtype=float)
        self.demand = np.asarray(demand, dtype=float)
        self.m, self.n = self.cost.shape
        if self.supply.shape != (self.m,) or self.demand.shape != (self.n,):
            raise ValueError("supply/demand shapes do not match the cost matrix")
        self.flow = np.zeros_like(self.cost)
        self.basis: set[tuple[int, int]] = set()
        self.pivots = 0

    def _north_west(self) -> None:
        supply = self.supply.copy()
        demand = self.demand.copy()
        i = j = 0
        while True:
            qty = min(supply[i], demand[j])
            self.flow[i, j] = qty
            self.basis.add((i, j))
            supply[i] -= qty
            demand[j] -= qty
            if i == self.m - 1 and j == self.n - 1:
                break
            # Exactly one index advances per step so the basis holds m+n-1 cells.
            if i == self.m - 1:
                j += 1
            elif j == self.n - 1:
                i += 1
            elif supply[i] <= demand[j]:
                i += 1
            else:
                j += 1

    def _adjacency(self) -> list[list[int]]:
        # Nodes 0..m-1 are rows, m..m+n-1 are columns.
        adj: list[list[int]] = [[] for _ in range(self.m + self.n)]
        for i, j in sorted(self.basis):
            adj[i].append(self.m + j)
            adj[self.m + j].append(i)
        return adj

    def _potentials(self, adj: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
        u = np.full(self.m, np.nan)
        v = np.full(self.n, np.nan)
        u[0] = 0.0
        queue = deque([0])
        seen = {0}
        while queue:
            node = queue.popleft()
            for other in adj[node]:
                if other in seen:
                    continue
                seen.add(other)
                if node < self.m:
                    v[other - self.m] = self.cost[node, other - self.m] - u[node]
                else:
                    u[other] = self.cost[other, node - self.m] - v[node - self.m]
                queue.append(other)
        if np.isnan(u).any() or np.isnan(v).any():
            raise NumericalError("transportation basis is not a spanning tree")
        return u, v

    def _tree_path(self, adj: list[list[int]], start: int, goal: int) -> list[int]:
        parent = {start: start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for other in adj[node]:
                if other not in parent:
                    parent[other] = node
                    queue.append(other)
        if goal not in parent:
            raise NumericalError("entering cell does not close a cycle")
        path = [goal]
        while path[-1] != start:
            path.append(parent[path[-1]])
        return path[::-1]

    def solve(self, max_pivots: int | None = None) -> np.ndarray:
        self._north_west()
        limit = max_pivots or 50 * (self.m + self.n) * max(self.m, self.n) + 100
        scale = max(1.0, float(np.abs(self.cost).max(initial=0.0)))
        tol = 1e-12 * scale
        mass_tol = 1e-14 * max(1.0, float(self.supply.sum()))
        degenerate = False
        nonbasic = np.ones_like(self.cost, dtype=bool)
        for i, j in self.basis:
            nonbasic[i, j] = False

        while True:
            adj = self._adjacency()
            u, v = self._potentials(adj)
            reduced = self.cost - u[:, None] - v[None, :]
            candidates = nonbasic & (reduced < -tol)
            if not candidates.any():
                break
            if self.pivots >= limit:
                raise NumericalError(f"transportation simplex exceeded {limit} pivots")
            if degenerate:
                flat = int(np.flatnonzero(candidates.ravel())[0])
            else:
                flat = int(np.argmin(np.where(candidates, reduced, np.inf).ravel()))
            ei, ej = divmod(flat, self.n)

            path = self._tree_path(adj, ei, self.m + ej)
            cycle = [(ei, ej)]
            for a, b in zip(path, path[1:]):
                cycle.append((a, b - self.m) if a < self.m else (b, a - self.m))
            minus = cycle[1::2]
            theta = min(self.flow[c] for c in minus)
            leaving = min(c for c in minus if self.flow[c] == theta)
            for pos, cell in enumerate(cycle):
                self.flow[cell] += theta if pos % 2 == 0 else -theta
            self.flow[leaving] = 0.0
            self.basis.remove(leaving)
            self.basis.add((ei, ej))
            nonbasic[leaving] = True
            nonbasic[ei, ej] = False
            degenerate = theta <= mass_tol
            self.pivots += 1

        np.clip(self.flow, 0.0, None, out=self.flow)
        return self.flow


def _solve_highs(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> np.ndarray:
    m, n = cost.shape
    cells = np.arange(m * n)
    rows = np.concatenate([cells // n, m + cells % n])
    a_eq = sparse.coo_matrix((np.ones(2 * m * n), (rows, np.tile(cells, 2))), shape=(m + n, m * n))
    result = linprog(
        cost.ravel(),
        A_eq=a_eq.tocsr(),
        b_eq=np.concatenate([supply, demand]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if result.status != 0:
        raise NumericalError(f"HiGHS failed on the transportation LP: {result.message}")
    return np.clip(result.x.reshape(m, n), 0.0, None)


def _balanced_masses(P: WeightedPointSet, constraint: AssignmentConstraint, settings: Settings) -> np.ndarray:
    total = P.total_weight
    masses = np.asarray(constraint.masses, dtype=float)
    gap = abs(masses.sum() - total)
    if gap > settings.mass_tolerance * total:
        raise MassMismatchError(
            f"mass mismatch: constraint carries {masses.sum()!r}, point set weighs {total!r}"
        )
    if gap > 1e-12 * total:
        LOGGER.warning("Renormalising constraint masses (relative gap %.3e)", gap / total)
    if gap > 0:
        masses = masses * (total / masses.sum())
    return masses


def solve_transport(
    P: WeightedPointSet,
    centers: Sequence[int] | np.ndarray,
    constraint: AssignmentConstraint,
    z: float = 1.0,
    settings: Settings | None = None,
) -> TransportPlan:
    """Optimal fractional assignment of P to ``centers`` delivering the constraint masses."""

    cfg = resolve_settings(settings)
    center_arr = np.asarray(centers).reshape(-1)
    if center_arr.size == 0:
        raise EmptyCenterSetError("transport needs at least one center")
    if center_arr.size != len(constraint.masses):
        raise MassMismatchError(
            f"mass mismatch: {center_arr.size} centers but {len(constraint.masses)} masses"
        )
    demand = _balanced_masses(P, constraint, cfg)
    supply = np.asarray(P.weights, dtype=float)
    cost = P.backend.pairwise(P.handles, center_arr) ** z

    if supply.size * center_arr.size <= cfg.simplex_max_cells:
        flow = TransportationSimplex(cost, supply, demand).solve()
        solver = "simplex"
    else:
        LOGGER.warning("HiGHS fallback for %d x %d transport", supply.size, center_arr.size)
        flow = _solve_highs(cost, supply, demand)
        solver = "highs"

    rows, cols = np.nonzero(flow > 0)
    mass = flow[rows, cols]
    return TransportPlan(
        point_index=rows.astype(np.int64),
        center_index=cols.astype(np.int64),
        mass=mass,
        objective=float(np.dot(mass, cost[rows, cols])),
        n_points=int(supply.size),
        n_centers=int(center_arr.size),
        solver=solver,
    )


def constrained_cost(
    P: WeightedPointSet,
    centers: Sequence[int] | np.ndarray,
    constraint: AssignmentConstraint,
    z: float = 1.0,
    settings: Settings | None = None,
) -> float:
    return solve_transport(P, centers, constraint, z, settings).objective


def induced_constraint(P: WeightedPointSet, centers: Sequence[int] | np.ndarray) -> AssignmentConstraint:
    """Masses of the nearest-center assignment (ties to the lowest center index)."""

    center_arr = np.asarray(centers).reshape(-1)
    labels, _ = nearest_centers(P, center_arr)
    masses = np.bincount(labels, weights=P.weights, minlength=center_arr.size)
    return AssignmentConstraint(centers=[int(c) for c in center_arr], masses=masses.tolist())


def random_constraint(
    centers: Sequence[int] | np.ndarray,
    total: float,
    seed: int | np.random.Generator = 0,
) -> AssignmentConstraint:
    """Symmetric Dirichlet(1) masses scaled to ``total``."""

    if total <= 0:
        raise ValueError("random constraints need a positive total")
    center_list = [int(c) for c in np.asarray(centers).reshape(-1)]
    if not center_list:
        raise EmptyCenterSetError("random constraint needs at least one center")
    if len(center_list) == 1:
        return AssignmentConstraint(centers=center_list, masses=[float(total)])
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    masses = rng.dirichlet(np.ones(len(center_list))) * total
    return AssignmentConstraint(centers=center_list, masses=masses.tolist())


def write_plan_csv(plan: TransportPlan, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    plan.to_frame().to_csv(target, index=False, float_format="%.17g")
    LOGGER.info("Wrote transport plan (%d cells) to %s", len(plan.mass), target)
    return target
