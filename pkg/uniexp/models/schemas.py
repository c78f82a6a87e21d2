from datetime import datetime
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SpsOptions(BaseModel):
    """
    Flags selecting one of the four single-time series variants.

    `renormalize` is the "r" suffix, `two_tailed` the "2" suffix; SPS2r sets both.
    """

    renormalize: bool = False
    two_tailed: bool = False
    eps: float = 1e-16

    model_config = ConfigDict(frozen=True)

    @field_validator("eps")
    @classmethod
    def eps_in_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        return value

    @property
    def variant(self) -> str:
        return "SPS" + ("2" if self.two_tailed else "") + ("r" if self.renormalize else "")

    @classmethod
    def from_variant(cls, variant: str, eps: float = 1e-16) -> "SpsOptions":
        """
        Build options from a variant label such as "SPS2r" or "2r".

        Raises:
            ValueError: If the label is not one of SPS, SPSr, SPS2, SPS2r.
        """
        label = variant.upper().removeprefix("SPS").lower()
        if label not in ("", "r", "2", "2r"):
            raise ValueError(f"unknown variant {variant!r}")
        return cls(renormalize="r" in label, two_tailed="2" in label, eps=eps)


class TruncationWindow(BaseModel):
    m_lo: int = Field(ge=0)
    m_hi: int = Field(ge=0)
    eps: float
    rho_t: float = Field(ge=0.0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def ordered(self) -> "TruncationWindow":
        if self.m_lo > self.m_hi:
            raise ValueError("m_lo must not exceed m_hi")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        return self


class BoundSet(BaseModel):
    """
    Closed-form bracket for the Poisson quantile at (rho, eps).

    Attributes:
        m_plus (float): Upper bound, always applicable.
        m_minus (Optional[float]): Lower bound; None when not applicable.
        m_plus_plus (Optional[float]): Refined upper bound; None when not applicable.
        A (Optional[float]): 2ρ·h((m_plus + 1)/ρ), computed when eps < 0.04.
        B (Optional[float]): -½·log(4πρ·h(m_minus/ρ)), computed when m_minus exists.
        trivial (bool): 1 - e^{-ρ} <= eps, so the quantile is 0.
        small_rho (bool): ρ <= √eps, so the quantile is at most 1.
    """

    rho: float
    eps: float
    m_plus: float
    m_minus: Optional[float] = None
    m_plus_plus: Optional[float] = None
    A: Optional[float] = None
    B: Optional[float] = None
    trivial: bool = False
    small_rho: bool = False

    model_config = ConfigDict(frozen=True)

    @property
    def minus_applicable(self) -> bool:
        return self.m_minus is not None

    @property
    def plus_plus_applicable(self) -> bool:
        return self.m_plus_plus is not None


class Violation(BaseModel):
    kind: Literal["negative_offdiagonal", "positive_diagonal", "row_sum"]
    row: int
    col: Optional[int] = None
    magnitude: float

    def describe(self) -> str:
        if self.kind == "negative_offdiagonal":
            return f"negative off-diagonal ({self.row + 1},{self.col + 1})"
        if self.kind == "positive_diagonal":
            return f"positive diagonal at {self.row + 1}"
        return f"row-sum violation at {self.row + 1}: {self.magnitude:.3e}"


class ValidationReport(BaseModel):
    mode: Literal["conservative", "substochastic"]
    row_sum_tol: float
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class SparsityStats(BaseModel):
    d: int
    nnz: int
    r: float


class TimeGrid(BaseModel):
    times: List[float]

    model_config = ConfigDict(frozen=True)

    @field_validator("times")
    @classmethod
    def strictly_ascending(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("time grid must hold at least one time")
        if value[0] <= 0.0:
            raise ValueError("times must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("times not ascending")
        return value

    def __len__(self) -> int:
        return len(self.times)


class SeirsSummary(BaseModel):
    t: float
    extinction_prob: float
    conditional_load: float
    load_defined: bool


class RunReport(BaseModel):
    """One JSON line describing a CLI kernel run."""

    project: str
    command: List[str]
    input_digests: dict[str, str] = Field(default_factory=dict)
    eps: float
    variant: str
    m_lo: int
    m_hi: int
    n_sparse: int
    wall_ms: float = Field(ge=0.0)
    outputs: List[str] = Field(default_factory=list)
    created_at: datetime = Field(default_factory=datetime.now)


class BenchRow(BaseModel):
    command: str
    variant: str
    model: str
    rho_t: float
    n_sparse: int
    wall_ms: float
    wall_min_ms: float
    wall_max_ms: float
    error: Optional[float] = None
    summary: Optional[float] = None
    ratio: Optional[float] = None

    model_config = ConfigDict(from_attributes=True)
