"""Typed data models for parameters, run configuration and reports."""

from __future__ import annotations

import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str.__str__(self)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(self, format_spec)
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SEED_MAX = 2**64 - 1


class CoresetMode(StrEnum):
    VANILLA = "vanilla"
    ASSIGNMENT_PRESERVING = "assignment_preserving"


class BudgetMode(StrEnum):
    ASSIGNMENT_PRESERVING = "assignment_preserving"
    UNCONSTRAINED = "unconstrained"


class BudgetForm(StrEnum):
    EPS5 = "eps5"
    EPS3_WITH_DIM = "eps3_with_dim"


class BackendKind(StrEnum):
    EUCLIDEAN = "euclidean"
    GRAPH = "graph_shortest_path"
    WASSERSTEIN = "wasserstein_tuple"
    FRECHET = "discrete_frechet"


class Provenance(StrEnum):
    TWO_POINT = "two-point"
    RING_SAMPLE = "ring-sample"
    CENTER_MASS = "center-mass"


class ClusteringParams(BaseModel):
    """Parameters of a (k, z)-clustering coreset construction."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1, description="Number of centers.")
    z: float = Field(default=1.0, ge=1.0, description="Distance power: 1 is median, 2 is means.")
    eps: float = Field(default=0.2, gt=0.0, lt=1.0)
    delta: float = Field(default=0.01, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0, le=SEED_MAX)

    @field_validator("z", "eps", "delta")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value


class SizeAccounting(BaseModel):
    """How a coreset's size decomposes across the pipeline stages."""

    model_config = ConfigDict(frozen=True)

    clusters: int
    center_mass: int
    groups_total: int
    two_point_points: int
    k1_points: int
    rings: int
    ring_budget: int = Field(..., description="Uncapped per-ring sample budget; independent of n.")
    ring_budgets_capped: int = Field(..., description="Sum over rings of min(m, |R|).")
    ring_sample_points: int
    size: int
    size_bound: int
    within_bound: bool


class StructuralReport(BaseModel):
    """Counts of a ring decomposition checked against their concrete bounds."""

    model_config = ConfigDict(frozen=True)

    heavy_rings: int
    buckets: int
    groups: int
    coreset_points: int
    heavy_bound: float
    group_bound: float
    heavy_ok: bool
    groups_ok: bool

    @property
    def passed(self) -> bool:
        return self.heavy_ok and self.groups_ok


class K1StructuralReport(BaseModel):
    """Counts of a k=1 reduction checked against their concrete bounds."""

    model_config = ConfigDict(frozen=True)

    w_rings: int
    coreset_points: int
    ring_bound: int
    rings_ok: bool
    size_ok: bool

    @property
    def passed(self) -> bool:
        return self.rings_ok and self.size_ok


class TrialRecord(BaseModel):
    """One evaluated center set (and optional constraint)."""

    trial: int
    generator: str
    centers: list[int]
    constraint: Optional[list[float]] = None
    cost_full: float
    cost_coreset: float
    relative_error: float
    additive_error: float


class EvalReport(BaseModel):
    """Aggregated coreset errors over randomized center sets."""

    trials: list[TrialRecord]
    threshold: float
    additive_reference: float = 0.0
    max_relative_error: float
    mean_relative_error: float
    quantiles: dict[str, float]
    max_additive_error: float
    failure_count: int
    parts: dict[str, EvalReport] = Field(default_factory=dict, description="Per group signature, fair coresets only.")

    @property
    def passed(self) -> bool:
        return self.failure_count == 0 and all(part.passed for part in self.parts.values())


class RunConfig(BaseModel):
    """Validated configuration of one CLI invocation."""

    model_config = ConfigDict(frozen=True)

    subcommand: str
    input: Optional[str] = Field(default=None, description="Local path or http(s) URL.")
    points: Optional[str] = None
    coreset: Optional[str] = None
    output: Optional[Path] = None
    csv: bool = False
    backend: BackendKind = BackendKind.EUCLIDEAN
    p: float = Field(default=1.0, ge=1.0)
    ell: Optional[int] = Field(default=None, ge=1)
    m_cap: Optional[int] = Field(default=None, ge=1)
    params: ClusteringParams
    mode: CoresetMode = CoresetMode.VANILLA
    fair: bool = False
    budget_c0: Optional[float] = Field(default=None, gt=0)
    budget_c1: Optional[float] = Field(default=None, gt=0)
    budget_form: Optional[BudgetForm] = None
    alpha_budget: Optional[float] = Field(default=None, ge=0)
    trials: Optional[int] = Field(default=None, ge=1)
    threshold: Optional[float] = Field(default=None, gt=0)
    constraint_mode: str = "none"
    constraint: Optional[str] = Field(default=None, description="Constraint JSON evaluated as an extra trial.")
    plan_out: Optional[Path] = None
    threads: Optional[int] = Field(default=None, ge=1)
    profile: str = "gaussian"
    sizes: list[int] = Field(default_factory=lambda: [500, 1000, 2000, 4000, 8000])

    @field_validator("constraint_mode")
    @classmethod
    def _known_constraint_mode(cls, value: str) -> str:
        if value not in {"none", "induced", "random", "mixed"}:
            raise ValueError(f"unknown constraint mode {value!r}")
        return value

    @field_validator("profile")
    @classmethod
    def _known_profile(cls, value: str) -> str:
        if value not in {"gaussian", "rings", "tuples", "graph", "curves"}:
            raise ValueError(f"unknown bench profile {value!r}")
        return value

    @model_validator(mode="after")
    def _backend_fields(self) -> "RunConfig":
        if self.fair and self.backend is not BackendKind.EUCLIDEAN:
            raise ValueError("fair builds need a labelled euclidean CSV input")
        if any(size < 1 for size in self.sizes):
            raise ValueError("bench sizes must be positive")
        if self.plan_out is not None and self.constraint is None:
            raise ValueError("--plan-out needs --constraint")
        return self
