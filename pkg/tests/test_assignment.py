"""Unit tests for assignment constraints and the transportation solver."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from ringcore import assignment
from ringcore.assignment import (
    AssignmentConstraint,
    TransportationSimplex,
    induced_constraint,
    random_constraint,
    solve_transport,
    write_plan_csv,
)
from ringcore.config import Settings
from ringcore.exceptions import MassMismatchError
from ringcore.metric_core import EuclideanBackend, WeightedPointSet, cost_z


def line(*values: float, weights=None) -> WeightedPointSet:
    return WeightedPointSet.from_backend(EuclideanBackend(np.asarray(values, dtype=float)[:, None]), weights)


@pytest.fixture()
def random_instance() -> tuple[WeightedPointSet, list[int]]:
    rng = np.random.default_rng(21)
    P = WeightedPointSet.from_backend(EuclideanBackend(rng.normal(size=(30, 2))), rng.integers(1, 5, size=30))
    return P, [3, 8, 14, 27]


def test_identity_assignment_costs_nothing() -> None:
    P = line(0, 1)
    plan = solve_transport(P, [0, 1], AssignmentConstraint(centers=[0, 1], masses=[1, 1]), 1.0)
    assert plan.objective == pytest.approx(0.0, abs=1e-12)


def test_forced_assignment() -> None:
    P = line(0, 1)
    plan = solve_transport(P, [0, 1], AssignmentConstraint(centers=[0, 1], masses=[2, 0]), 1.0)
    assert plan.objective == pytest.approx(1.0)


def test_plan_marginals_and_objective(random_instance) -> None:
    P, centers = random_instance
    gamma = random_constraint(centers, P.total_weight, seed=4)
    plan = solve_transport(P, centers, gamma, 1.0)
    assert np.allclose(plan.row_sums(), P.weights, rtol=1e-9)
    assert np.allclose(plan.column_sums(), gamma.masses, rtol=1e-9, atol=1e-9)
    dist = P.backend.pairwise(P.handles, centers)
    recomputed = float(np.sum(plan.dense() * dist))
    assert plan.objective == pytest.approx(recomputed, rel=1e-9)


def test_induced_constraint_recovers_unconstrained_cost(random_instance) -> None:
    P, centers = random_instance
    for z in (1.0, 2.0):
        plan = solve_transport(P, centers, induced_constraint(P, centers), z)
        assert plan.objective == pytest.approx(cost_z(P, centers, z), rel=1e-9)


def test_highs_fallback_matches_simplex(random_instance) -> None:
    P, centers = random_instance
    gamma = random_constraint(centers, P.total_weight, seed=9)
    simplex = solve_transport(P, centers, gamma, 1.0, Settings(simplex_max_cells=10_000))
    highs = solve_transport(P, centers, gamma, 1.0, Settings(simplex_max_cells=0))
    assert simplex.solver == "simplex"
    assert highs.solver == "highs"
    assert highs.objective == pytest.approx(simplex.objective, rel=1e-7)


def test_highs_fallback_is_logged_as_warning(random_instance, monkeypatch) -> None:
    P, centers = random_instance
    messages: list[str] = []
    monkeypatch.setattr(assignment.LOGGER, "warning", lambda msg, *args: messages.append(msg % args))
    gamma = random_constraint(centers, P.total_weight, seed=2)
    solve_transport(P, centers, gamma, 1.0, Settings(simplex_max_cells=10_000))
    assert messages == []
    solve_transport(P, centers, gamma, 1.0, Settings(simplex_max_cells=0))
    assert messages == [f"HiGHS fallback for 30 x {len(centers)} transport"]


def test_optimum_lower_bounds_proportional_plan(random_instance) -> None:
    P, centers = random_instance
    gamma = random_constraint(centers, P.total_weight, seed=2)
    plan = solve_transport(P, centers, gamma, 1.0)
    proportional = np.outer(P.weights, np.asarray(gamma.masses) / P.total_weight)
    feasible_cost = float(np.sum(proportional * P.backend.pairwise(P.handles, centers)))
    assert plan.objective <= feasible_cost + 1e-9


def test_objective_scales_linearly(random_instance) -> None:
    P, centers = random_instance
    gamma = random_constraint(centers, P.total_weight, seed=5)
    scaled_P = P.with_weights(P.weights * 3.5)
    scaled_gamma = AssignmentConstraint(centers=gamma.centers, masses=[m * 3.5 for m in gamma.masses])
    base = solve_transport(P, centers, gamma, 2.0).objective
    assert solve_transport(scaled_P, centers, scaled_gamma, 2.0).objective == pytest.approx(3.5 * base, rel=1e-9)


def test_mass_mismatch_is_rejected() -> None:
    P = line(0, 1)
    with pytest.raises(MassMismatchError, match="mass mismatch"):
        solve_transport(P, [0, 1], AssignmentConstraint(centers=[0, 1], masses=[1, 2]), 1.0)


def test_small_mass_gap_is_renormalised() -> None:
    P = line(0, 1)
    gamma = AssignmentConstraint(centers=[0, 1], masses=[1.0 + 1e-8, 1.0])
    plan = solve_transport(P, [0, 1], gamma, 1.0)
    assert plan.column_sums().sum() == pytest.approx(2.0, rel=1e-12)


def test_induced_constraint_examples() -> None:
    assert induced_constraint(line(0, 10), [0, 1]).masses == [1.0, 1.0]
    assert induced_constraint(line(0, 1, 2), [0]).masses == [3.0]


def test_induced_constraint_conserves_mass(random_instance) -> None:
    P, centers = random_instance
    assert sum(induced_constraint(P, centers).masses) == pytest.approx(P.total_weight)


def test_random_constraint_properties() -> None:
    assert random_constraint([4], 7.5, seed=1).masses == [7.5]
    gamma = random_constraint([0, 1, 2], 9.0, seed=3)
    assert all(m >= 0 for m in gamma.masses)
    assert sum(gamma.masses) == pytest.approx(9.0, abs=1e-9)
    assert random_constraint([0, 1, 2], 9.0, seed=3) == gamma


def test_constraint_model_validation() -> None:
    with pytest.raises(ValidationError):
        AssignmentConstraint(centers=[0, 1], masses=[1.0])
    with pytest.raises(ValidationError):
        AssignmentConstraint(centers=[0], masses=[-1.0])


def test_north_west_start_handles_degenerate_marginals() -> None:
    cost = np.array([[1.0, 2.0, 3.0], [4.0, 1.0, 2.0], [3.0, 3.0, 1.0]])
    supply = np.array([1.0, 1.0, 1.0])
    demand = np.array([1.0, 1.0, 1.0])
    flow = TransportationSimplex(cost, supply, demand).solve()
    assert float(np.sum(flow * cost)) == pytest.approx(3.0)
    assert np.allclose(flow.sum(axis=1), supply)
    assert np.allclose(flow.sum(axis=0), demand)


def test_write_plan_csv(tmp_path) -> None:
    P = line(0, 1, 5)
    plan = solve_transport(P, [0, 2], AssignmentConstraint(centers=[0, 2], masses=[2, 1]), 1.0)
    path = write_plan_csv(plan, tmp_path / "plan.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["point", "center", "mass"]
    assert frame["mass"].sum() == pytest.approx(3.0)
