"""Pydantic request/response models for the HTTP service.

Field defaults encode the hypothetical-study setup (M=40, Rx=Rs=0.2,
s=0.2, r=1, alpha=0.025, Cs=0.05, rho_xy=0.3, rho_xs=0.5, rho_ys=-0.3)
so that minimal requests reproduce the reference figures. Domain
validation beyond simple bounds happens in the core types, which the
handlers construct from these models.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

DEFAULT_W_GRID = [round(0.5 + 0.05 * i, 10) for i in range(11)]
DEFAULT_RHO_YS_LIST = [-0.1, -0.3, -0.5]
DEFAULT_CX_GRID = [round(0.02 * i, 10) for i in range(11)]


class DesignFields(BaseModel):
    M: int = Field(40, description="patients per dose arm")
    Rx: float = Field(0.2, description="average expected ORR")
    Rs: float = Field(0.2, description="average expected grade 3-4 AE rate")


class RuleFields(BaseModel):
    scenario: Literal[1, 2] = 1
    Cx: float = Field(0.0, description="ORR-difference threshold")
    Cs: float = Field(0.05, description="AE-rate-difference threshold")


class CorrFields(BaseModel):
    rho_xy: float = Field(0.3, description="ORR vs OS correlation")
    rho_xs: float = Field(0.5, description="ORR vs AE correlation")
    rho_ys: float = Field(-0.3, description="OS vs AE correlation")


class GeometryFields(BaseModel):
    s: float = Field(0.2, description="stage-1 OS information fraction")
    r: float = Field(1.0, description="dose:control randomisation ratio")
    alpha: float = Field(0.025, description="one-sided target level")


class WinnerProbRequest(DesignFields, RuleFields, CorrFields):
    pass


class WinnerProbResponse(BaseModel):
    w: float
    w1: float
    w2: float


class WinnerSweepRequest(DesignFields):
    Cs: float = 0.05
    rho_xy: float = 0.3
    rho_xs: float = 0.5
    rho_ys_list: list[float] = Field(default_factory=lambda: list(DEFAULT_RHO_YS_LIST))
    cx_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_CX_GRID))


class WinnerSweepRow(BaseModel):
    scenario: int
    rho_ys: float
    Cx: float
    w: float
    w1: float
    w2: float


class WinnerSweepResponse(BaseModel):
    rows: list[WinnerSweepRow]


class AlphaExactRequest(GeometryFields):
    w_grid: list[float] = Field(default_factory=lambda: [0.5])


class AlphaExactRow(BaseModel):
    w: float
    alphaE: float


class AlphaExactResponse(BaseModel):
    rows: list[AlphaExactRow]


class AdjustPRequest(BaseModel):
    p1s: float
    w: float
    r: float = 1.0


class AdjustPResponse(BaseModel):
    p1s: float
    w: float
    r: float
    p1a: float


class CombineRequest(BaseModel):
    p1a: float
    p2s: float
    s: float = 0.2


class CombineResponse(BaseModel):
    p1a: float
    p2s: float
    s: float
    p_c: float


class AlphaComboRequest(GeometryFields):
    w_grid: list[float] = Field(default_factory=lambda: [0.5])
    grid_n: int = 10_000
    method: Literal["exact", "sidak", "dunnett"] = "exact"


class AlphaComboRow(BaseModel):
    w: float
    method: str
    alpha_c: float


class AlphaComboResponse(BaseModel):
    rows: list[AlphaComboRow]


class AlphaSweepRequest(GeometryFields):
    w_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_W_GRID))
    grid_n: int = 10_000


class AlphaSweepRow(BaseModel):
    w: float
    alphaE: float
    alphaC: float
    alphaC_dunnett: float
    alphaC_sidak: float


class AlphaSweepResponse(BaseModel):
    rows: list[AlphaSweepRow]


class SubgroupRow(BaseModel):
    variable: str
    subgroup: str
    effect1: float
    effect2: float


class PatientRow(BaseModel):
    arm: Literal["treatment", "control"]
    response: bool
    ae: bool
    time: float = 0.0
    event: bool = False
    stratum: Optional[str] = None


class EstimateCorrRequest(BaseModel):
    method: Literal["subgroup", "bootstrap"]
    subgroups: Optional[list[SubgroupRow]] = None
    patients: Optional[list[PatientRow]] = None
    stat1: str = "orr_diff_z"
    stat2: str = "ae_diff_z"
    B: int = 1000
    seed: int = 0
    use_strata: bool = False


class EstimateCorrResponse(BaseModel):
    estimate: float
    ci_low: Optional[float]
    ci_high: Optional[float]
    method: str
    n_resamples: int


class SimulateRequest(DesignFields, RuleFields, CorrFields, GeometryFields):
    target: Literal["w", "type1-abstract", "type1-full"]
    n: int = 1_000_000
    seed: int = 0
    mode: Literal["difference", "arm_level"] = "difference"
    test: Literal["exact_parametric", "combination", "dunnett", "sidak"] = "exact_parametric"
    w: Optional[float] = Field(None, description="winner probability (type1-abstract)")
    alphaE: Optional[float] = Field(
        None, description="adjusted level for type1-abstract; solved from w when omitted")


class SimulateResponse(BaseModel):
    value: float
    std_error: float
    n: int
    seed: int


class ErrorResponse(BaseModel):
    detail: str
    kind: Literal["validation", "numeric", "data"]
