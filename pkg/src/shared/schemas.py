from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field


class BoxFile(BaseModel):
    """Nonsignaling box as stored on disk, p indexed [alpha][beta][a][b]"""

    model_config = ConfigDict(extra="ignore")

    n_a: int = Field(..., ge=1, description="Number of Alice settings")
    n_b: int = Field(..., ge=1, description="Number of Bob settings")
    d_a: int = Field(..., ge=2, description="Number of Alice outcomes")
    d_b: int = Field(..., ge=2, description="Number of Bob outcomes")
    p: List[List[List[List[float]]]] = Field(
        ..., description="P(A=a, B=b | alpha, beta) indexed [alpha][beta][a][b]"
    )


class CollinsGisinFile(BaseModel):
    """Binary-outcome box in Collins-Gisin notation, joint indexed [bob][alice]"""

    model_config = ConfigDict(extra="ignore")

    pa: List[float] = Field(..., description="Pr(A_j = 0) per Alice setting")
    pb: List[float] = Field(..., description="Pr(B_i = 0) per Bob setting")
    joint: List[List[float]] = Field(
        ..., description="Pr(A_j = 0, B_i = 0) indexed [i][j]"
    )


class ProtocolFile(BaseModel):
    """Encoding-decoding protocol; f and h are ranked little-endian over [d]^n"""

    model_config = ConfigDict(extra="ignore")

    n: int = Field(..., ge=1)
    d: int = Field(..., ge=2)
    f: List[int]
    h: List[int]
    r: List[int]
    n_alpha: Optional[int] = Field(
        None, description="Number of Alice box settings, defaults to n"
    )


class InequalityFile(BaseModel):
    """Quadratic inequality; coeffs[i] lists [re, im] pairs in (m, j) order, j fastest"""

    model_config = ConfigDict(extra="ignore")

    family: str
    params: Dict[str, Any] = Field(default_factory=dict)
    bound: float = Field(..., gt=0)
    n_a: int = Field(..., ge=1)
    d: int = Field(..., ge=2)
    coeffs: List[List[List[float]]]


class EvaluationResponse(BaseModel):
    lhs: float
    bound: float
    violation: float
    violated: bool


class ICEvaluationResponse(BaseModel):
    lhs_bits: float
    capacity_bits: float
    gap: float
    per_i: List[float]


class ValidationReport(BaseModel):
    """Outcome of binding a generated inequality to the entropic oracle"""

    family: str
    seed: int
    trials: int
    disagreements: int = Field(
        description="Sign disagreements with both margins outside the band"
    )
    max_disagreement_margin: float
    max_limit_error: float = Field(
        description="max |extrapolated limit - normalized LHS| over the trials"
    )
    balanced_h: bool
    balanced_per_setting: bool = Field(
        description="h is balanced on every preimage of f"
    )
    asserted: bool = Field(
        description="False when agreement is only reported (h unbalanced on some preimage)"
    )


class Check(BaseModel):
    name: str
    expected: Any
    actual: Any
    tolerance: float = 0.0
    provenance: Literal["paper", "derived-oracle"]
    passed: bool


class ExperimentResult(BaseModel):
    name: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    values: Dict[str, Any] = Field(default_factory=dict)
    checks: List[Check] = Field(default_factory=list)
    runtime_s: float = 0.0

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class RegionRow(BaseModel):
    q1: float
    q2: float
    uffink_lhs: float
    envelope_lhs: float
    envelope_eps: float
    tlm_quantum: bool
    uffink_ok: bool
    envelope_ok: bool


class EvaluateRequest(BaseModel):
    """Request body for evaluating a named inequality family on a box"""

    family: str = Field(..., description="uffink, result1, d2dd or correlated")
    n: int = 2
    d: int = 2
    t: int = 1
    eps: float = 0.0
    box: BoxFile


class OracleRequest(BaseModel):
    box: BoxFile
    protocol: ProtocolFile
    e_c: float = Field(..., ge=-1.0, le=1.0)
