import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.errors import NumericError
from app.models import GeometryKind, SpectralInterval
from utils import config as settings
from utils.logspace import LogReal


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def _split(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def parse_range(text: str) -> list[float]:
    """'a..b:step' (inclusive) or a comma separated list."""
    text = text.strip()
    if ".." not in text:
        return [float(x) for x in _split(text)]
    bounds, _, step_txt = text.partition(":")
    lo_txt, _, hi_txt = bounds.partition("..")
    lo, hi = float(lo_txt), float(hi_txt)
    step = float(step_txt) if step_txt else 1.0
    if step <= 0 or hi < lo:
        raise ValueError(f"bad range '{text}'")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    return complex(str(text).replace(" ", "").replace("i", "j"))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    geometry: GeometryKind = GeometryKind.BARGMANN_FOCK
    m: int = Field(1, ge=1, le=3)
    weights: Optional[list[int]] = None
    k_list: list[int] = Field(default_factory=lambda: [100, 400, 1600])
    E: Optional[float] = None
    beta_list: list[float] = Field(default_factory=lambda: [0.0])
    point: Optional[list[complex]] = None
    interval: Optional[str] = None
    w_list: list[complex] = Field(default_factory=lambda: [0.3 + 0j])
    seed: int = Field(42, ge=0)
    samples: int = Field(500, ge=1)
    bins: int = Field(10, ge=1)
    tolerance: Optional[float] = Field(None, gt=0)
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    timestamp: bool = True
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("k_list", "weights", mode="before")
    @classmethod
    def _int_list(cls, value):
        if isinstance(value, str):
            return [int(float(x)) for x in parse_range(value)]
        if isinstance(value, int):
            return [value]
        return value

    @field_validator("beta_list", mode="before")
    @classmethod
    def _float_list(cls, value):
        if isinstance(value, str):
            return parse_range(value)
        if isinstance(value, (int, float)):
            return [float(value)]
        return value

    @field_validator("point", "w_list", mode="before")
    @classmethod
    def _complex_list(cls, value):
        if value is None:
            return value
        if isinstance(value, str):
            return [parse_complex(x) for x in _split(value)]
        if isinstance(value, (int, float, complex)):
            return [complex(value)]
        return [parse_complex(x) for x in value]

    @field_validator("interval")
    @classmethod
    def _interval(cls, value):
        if value is not None:
            SpectralInterval.parse(value)
        return value

    @model_validator(mode="after")
    def _consistency(self):
        if self.weights is None:
            self.weights = [1] * self.m
        if len(self.weights) != self.m:
            raise ValueError(f"expected {self.m} weights, got {len(self.weights)}")
        if any(b < 0 for b in self.weights) or not any(self.weights):
            raise ValueError("weights must be nonnegative and not all zero")
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise ValueError("k values must be positive")
        cap = settings.K_CAP_CPM if self.geometry == GeometryKind.PROJECTIVE else settings.K_CAP_BF
        if max(self.k_list) > cap:
            raise ValueError(f"k={max(self.k_list)} exceeds the cap {cap} for geometry '{self.geometry.value}'")
        self.k_list = sorted(set(self.k_list))
        if self.E is None:
            self.E = 0.5 * max(self.weights) if self.geometry == GeometryKind.PROJECTIVE else 1.0
        if self.E <= 0:
            raise ValueError("E must be positive")
        if self.geometry == GeometryKind.PROJECTIVE and self.E >= max(self.weights):
            raise ValueError(f"E must lie below max weight {max(self.weights)} on projective space")
        if self.point is not None and len(self.point) != self.m:
            raise ValueError(f"point needs {self.m} coordinates")
        return self


class LogRealOut(BaseModel):
    sign: int
    log_mag: Optional[float] = None
    value: Optional[float] = None

    @classmethod
    def of(cls, x: LogReal) -> "LogRealOut":
        return cls(**x.to_dict())


class ConvergenceRow(BaseModel):
    k: int
    exact: LogRealOut
    predicted: LogRealOut
    ratio: float
    scaled_error: float
    rate: float
    label: str = ""
    beta: Optional[float] = None
    energy: Optional[float] = None
    abs_error: Optional[float] = None
    alternate: Optional[LogRealOut] = None
    inputs: Optional[dict] = None

    @classmethod
    def compare(cls, k: int, exact: LogReal, predicted: LogReal, rate: float, **fields) -> "ConvergenceRow":
        """Row with ratio = exact/predicted and scaled_error = |ratio − 1|·k^rate."""
        if predicted.is_zero():
            raise NumericError(f"prediction vanished at k={k}")
        ratio = float(exact / predicted)
        scaled = abs(ratio - 1.0) * k ** rate
        if not (math.isfinite(ratio) and math.isfinite(scaled)):
            raise NumericError(f"non-finite comparison at k={k}: ratio={ratio}")
        return cls(k=k, exact=LogRealOut.of(exact), predicted=LogRealOut.of(predicted), ratio=ratio,
                   scaled_error=scaled, rate=rate, **fields)


class CharacterRow(BaseModel):
    k: int
    E: float
    w: str
    direct: str
    geometric: str
    euler_maclaurin: str
    max_relative_discrepancy: float
    passed: bool


class ZeroBinRow(BaseModel):
    k: int
    h_lo: float
    h_hi: float
    empirical: float
    stderr: float
    expected: float
    z_score: Optional[float] = None
    flagged: bool


class CriterionOut(BaseModel):
    name: str
    passed: bool
    detail: str
    measured: dict


class ReportOut(BaseModel):
    passed: bool
    criteria: list[CriterionOut]
