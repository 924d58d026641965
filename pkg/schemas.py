"""Pydantic schemas for the division-of-labor toolkit.

This module defines the validated parameter models and the report models
that cross module and CLI boundaries. Per-event records live next to the
engines as NamedTuples.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Params(BaseModel):
    """Task costs and defection probability.

    c1 is the rate at which an individual leaves task 1, c2 the rate for
    task 2. The first task is the cheaper one, so c1 <= c2 (equality is the
    anti-voter special case).
    """

    c1: float = Field(..., gt=0, description="Cost (switching rate) of task 1")
    c2: float = Field(..., gt=0, description="Cost (switching rate) of task 2")
    epsilon: float = Field(..., ge=0, le=1, description="Defection probability")

    @model_validator(mode="after")
    def _cheaper_task_first(self):
        if self.c1 > self.c2:
            raise ValueError(f"costs must satisfy c1 <= c2, got c1={self.c1}, c2={self.c2}")
        return self

    model_config = ConfigDict(frozen=True)


class InitialLaw(BaseModel):
    """Initial task assignment: all task 1, all task 2, Bernoulli product or explicit."""

    kind: Literal["all1", "all2", "bernoulli", "explicit"] = Field(
        ..., description="all1 | all2 | bernoulli | explicit"
    )
    p: Optional[float] = Field(None, ge=0, le=1, description="P(vertex starts at task 1)")
    tasks: Optional[List[int]] = Field(None, description="Explicit configuration")

    @model_validator(mode="after")
    def _arguments_match_kind(self):
        if self.kind == "bernoulli" and self.p is None:
            raise ValueError("bernoulli initial law needs p")
        if self.kind == "explicit":
            if not self.tasks:
                raise ValueError("explicit initial law needs tasks")
            if any(t not in (1, 2) for t in self.tasks):
                raise ValueError("explicit tasks must all be 1 or 2")
        return self

    model_config = ConfigDict(frozen=True)

    def label(self) -> str:
        if self.kind == "bernoulli":
            return f"bernoulli:{self.p:g}"
        if self.kind == "explicit":
            return "explicit:" + ",".join(str(t) for t in self.tasks)
        return self.kind


class Budget(BaseModel):
    """How long to run: a number of applied events or a time horizon s."""

    updates: Optional[int] = Field(None, ge=0, description="Events to apply")
    time: Optional[float] = Field(None, ge=0, description="Time horizon s")

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.updates is None) == (self.time is None):
            raise ValueError("budget needs exactly one of updates or time")
        return self

    model_config = ConfigDict(frozen=True)


class RunSummary(BaseModel):
    """Outcome of one simulated trajectory."""

    engine: str = Field(..., description="gillespie or graphical")
    vertex_count: int = Field(..., description="N")
    phi: float = Field(..., description="phi(s) integrated from t=0")
    phi_post_burnin: Optional[float] = Field(None, description="phi over [burnin, s]")
    residence: Dict[str, float] = Field(default_factory=dict,
                                        description="Fraction of time in each target configuration")
    agreement_density: Optional[float] = Field(None, description="Time-averaged agreement over designated edges")
    agreement_post_burnin: Optional[float] = Field(None, description="Same, over [burnin, s]")
    window_phi: Dict[str, float] = Field(default_factory=dict, description="phi over spatial windows")
    window_phi_post_burnin: Dict[str, float] = Field(default_factory=dict)
    event_count: int = Field(..., description="Events applied (no-op graphical marks included)")
    sim_time: float = Field(..., description="Elapsed simulated time s")
    absorbed: bool = Field(False, description="Total rate hit zero before the budget ran out")
    absorbed_at: Optional[float] = Field(None, description="Time of absorption")
    final_config: List[int] = Field(default_factory=list)


class HittingTimeReport(BaseModel):
    """Monte Carlo entry/exit times for the absorbing pair {xi_minus, xi_plus}."""

    vertex_count: int
    n1: int
    n2: int
    replicates: int
    mean_t_in: Optional[float] = None
    se_t_in: Optional[float] = None
    mean_t_out_plus: Optional[float] = None
    se_t_out_plus: Optional[float] = None
    mean_t_out_minus: Optional[float] = None
    se_t_out_minus: Optional[float] = None
    mean_t_out: Optional[float] = None
    se_t_out: Optional[float] = None
    expected_t_out_plus: Optional[float] = Field(None, description="1/(eps(N1 c1 + N2 c2))")
    expected_t_out_minus: Optional[float] = Field(None, description="1/(eps(N1 c2 + N2 c1))")
    t_out_lower_bound: Optional[float] = Field(None, description="1/(eps N c2)")


class FixedPointReport(BaseModel):
    """Complete-graph fixed point of the mean-field drift Q."""

    B: float
    u1_bar: float
    v1_bar: float
    quadratic: List[float] = Field(..., description="Coefficients (a, b, c) of Q = a u^2 + b u + c")
    discriminant: float
    residual: float = Field(..., description="Q(u1_bar, 1 - u1_bar)")


class MonotonicityReport(BaseModel):
    """Check that B -> u1_bar(B) decreases and of the ordering of its special values."""

    c1: float
    c2: float
    points: int
    strictly_decreasing: bool
    degenerate: bool = Field(..., description="c1 == c2: u1_bar is constant 1/2")
    max_increment: float
    v1_bar: float
    u1_at_1: float
    u1_at_2: float
    limit_at_zero: float
    ordering_holds: bool


class ExactReportRow(BaseModel):
    """One row of the exact complete-graph report."""

    N: int
    c1: float
    c2: float
    epsilon: float
    B: float
    u1_bar: float
    v1_bar: float
    stationary_mean: Optional[float] = None
    gap: Optional[float] = None


class CouplingReport(BaseModel):
    """Eventwise comparison of the projected vertex process with the edge dual."""

    vertex_count: int
    events: int
    flips: int
    jumps: int
    births: int
    annihilations: int
    ok: bool
    first_mismatch: Optional[Dict] = None


class AgreementReport(BaseModel):
    """Estimate of P(xi(x) = xi(x+1)) on a ring plus the phi observables."""

    vertex_count: int
    replicates: int
    horizon: float
    burnin: float
    agreement: float
    agreement_se: float
    phi: float
    phi_se: float
    window_phi: float
    window_phi_se: float
    window_half_width: int
    boundary: str = "ring"


class ExperimentSpec(BaseModel):
    """A simulate sweep parsed from the command line."""

    graph: str = Field(..., description="Graph spec string, e.g. complete:1000")
    c1: float = Field(1.0, gt=0)
    c2: float = Field(2.0, gt=0)
    epsilons: List[float] = Field(..., min_length=1)
    engine: Literal["gillespie", "graphical"] = "gillespie"
    updates: Optional[int] = Field(None, ge=0)
    time: Optional[float] = Field(None, ge=0)
    burnin: Optional[float] = Field(None, ge=0)
    replicates: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    init: str = "all1"
    out: Optional[str] = None
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _consistent(self):
        if any(not 0.0 <= e <= 1.0 for e in self.epsilons):
            raise ValueError("epsilon values must lie in [0, 1]")
        if self.c1 > self.c2:
            raise ValueError("costs must satisfy c1 <= c2 (task 1 is the cheaper task)")
        if (self.updates is None) == (self.time is None):
            raise ValueError("exactly one of updates or time is required")
        return self

    def budget(self) -> Budget:
        return Budget(updates=self.updates, time=self.time)
