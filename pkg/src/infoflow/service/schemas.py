"""Pydantic request/response models for the analyzer service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

Units = Literal["bits", "nats"]

QuantityTag = Literal[
    "directed_info",
    "directed_info_causal",
    "message_info",
    "cross_term",
    "feedback_directed_info",
    "conservation_residual",
]


class AlphabetSizes(BaseModel):
    message: int = Field(ge=1)
    input: int = Field(ge=1)
    output: int = Field(ge=1)
    state: int = Field(ge=1)
    feedback: int = Field(ge=1)


class ValidateRequest(BaseModel):
    system: dict[str, Any]
    budget: int | None = Field(default=None, ge=1)


class ValidateResponse(BaseModel):
    valid: bool
    horizon: int
    alphabets: AlphabetSizes
    trajectory_count: int


class ComputeRequest(ValidateRequest):
    tolerance: float = Field(default=1e-9, gt=0)
    units: Units = "bits"


class QuantitySet(BaseModel):
    forward_directed_info: float
    message_info: float
    cross_term: float
    feedback_directed_info: float
    directed_info_given_message: float
    message_info_with_feedback: float
    output_message_info: float


class ResidualSet(BaseModel):
    conservation: float
    markov_step: float
    decomposition: float
    chain_rule: float


class Report(BaseModel):
    units: Units
    tolerance: float
    trajectory_count: int
    quantities: QuantitySet
    residuals: ResidualSet
    cross_term_negative: bool
    passed: bool
    duration_seconds: float | None = None


class StatelessPair(BaseModel):
    state_conditioned: float
    unconditioned: float
    gap: float


class StatelessCheck(BaseModel):
    applicable: bool
    quantities: dict[str, StatelessPair] | None = None
    identity_residual: float | None = None
    max_gap: float | None = None
    passed: bool | None = None


class ZeroFlowCheck(BaseModel):
    """Structural reduction where the cross and feedback flows must vanish."""

    applicable: bool
    cross_term: float | None = None
    feedback_directed_info: float | None = None
    message_gap: float | None = None
    passed: bool | None = None


class Reductions(BaseModel):
    stateless: StatelessCheck
    noiseless_feedback: ZeroFlowCheck
    feedback_blind: ZeroFlowCheck


class VerifyResponse(BaseModel):
    report: Report
    reductions: Reductions
    passed: bool


class SweepAxis(BaseModel):
    param: str
    start: float
    stop: float
    steps: int = Field(ge=1)


class SweepRequest(BaseModel):
    name: str
    params: dict[str, float] = Field(default_factory=dict)
    axis: SweepAxis
    tolerance: float = Field(default=1e-9, gt=0)
    budget: int | None = Field(default=None, ge=1)


class SweepRow(BaseModel):
    param: float
    lhs_bits: float
    message_bits: float
    cross_bits: float
    feedback_bits: float
    residual_bits: float


class SweepResponse(BaseModel):
    columns: list[str]
    rows: list[SweepRow]
    csv: str


class SampleRequest(BaseModel):
    system: dict[str, Any] | None = None
    canonical: str | None = None
    params: dict[str, float] = Field(default_factory=dict)
    quantity: QuantityTag = "directed_info"
    counts: list[int] = Field(min_length=1)
    seed: int = 0
    budget: int | None = Field(default=None, ge=1)


class SampleRow(BaseModel):
    count: int
    estimate_bits: float
    std_error_bits: float
    exact_bits: float
    abs_error_bits: float


class SampleResponse(BaseModel):
    columns: list[str]
    rows: list[SampleRow]
    csv: str


class GenerateRequest(BaseModel):
    horizon: int = Field(ge=1)
    alphabets: AlphabetSizes
    feedback_blind_encoder: bool = False
    state_blind: bool = False
    noiseless_feedback: bool = False
    seed: int = 0
    budget: int | None = Field(default=None, ge=1)


class GenerateResponse(BaseModel):
    system: dict[str, Any]
    trajectory_count: int
