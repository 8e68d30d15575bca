from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from utils.logspace import LogReal


class GeometryKind(str, Enum):
    BARGMANN_FOCK = "bf"
    PROJECTIVE = "cpm"


class Regime(str, Enum):
    ONSHELL = "on_shell"
    OFFSHELL = "off_shell"
    BULK_ALLOWED = "bulk_allowed"
    BULK_FORBIDDEN = "bulk_forbidden"
    INTERFACE = "interface"


class CharacterRoute(str, Enum):
    DIRECT_SUM = "direct"
    GEOMETRIC = "geometric"
    EULER_MACLAURIN = "euler_maclaurin"


class ModelGeometry(BaseModel):
    """Bargmann–Fock space or projective space with a diagonal circle action."""

    model_config = ConfigDict(frozen=True)

    kind: GeometryKind
    m: int
    weights: tuple[int, ...]

    @model_validator(mode="after")
    def _check_weights(self):
        if self.m < 1:
            raise ValueError("complex dimension m must be at least 1")
        if len(self.weights) != self.m:
            raise ValueError(f"expected {self.m} weights, got {len(self.weights)}")
        if any(b < 0 for b in self.weights):
            raise ValueError("action weights must be nonnegative")
        if not any(self.weights):
            raise ValueError("action weights must not all vanish")
        return self

    @classmethod
    def bargmann_fock(cls, m: int = 1, weights: tuple[int, ...] | None = None) -> "ModelGeometry":
        return cls(kind=GeometryKind.BARGMANN_FOCK, m=m, weights=tuple(weights or (1,) * m))

    @classmethod
    def projective(cls, m: int = 1, weights: tuple[int, ...] | None = None) -> "ModelGeometry":
        return cls(kind=GeometryKind.PROJECTIVE, m=m, weights=tuple(weights or (1,) * m))

    @property
    def is_projective(self) -> bool:
        return self.kind == GeometryKind.PROJECTIVE

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def max_weight(self) -> int:
        return max(self.weights)

    def energy_range(self) -> tuple[float, float]:
        """Closure of H(M)."""
        if self.is_projective:
            return 0.0, float(self.max_weight)
        return 0.0, math.inf

    def label(self) -> str:
        w = ",".join(str(b) for b in self.weights)
        return f"{self.kind.value}(m={self.m};b={w})"


def exact_fraction(value) -> Fraction:
    """Exact rational for a decimal literal: 0.3 becomes 3/10, not the binary double."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(repr(float(value)))


@dataclass(frozen=True)
class SpectralInterval:
    """Interval of energies; None endpoints are infinite."""

    lower: Optional[Fraction] = None
    upper: Optional[Fraction] = None
    lower_closed: bool = True
    upper_closed: bool = False

    @classmethod
    def half_open(cls, a, b) -> "SpectralInterval":
        return cls(exact_fraction(a), exact_fraction(b), True, False)

    @classmethod
    def up_to(cls, E) -> "SpectralInterval":
        """(−∞, E]."""
        return cls(None, exact_fraction(E), False, True)

    @classmethod
    def below(cls, E) -> "SpectralInterval":
        """[0, E)."""
        return cls(Fraction(0), exact_fraction(E), True, False)

    @classmethod
    def everything(cls) -> "SpectralInterval":
        return cls(None, None, False, False)

    @classmethod
    def parse(cls, text: str) -> "SpectralInterval":
        """Parse '[a,b)', '(-inf,E]', '[0,0.5]' and friends."""
        s = text.strip()
        if len(s) < 5 or s[0] not in "[(" or s[-1] not in "])" or "," not in s:
            raise ValueError(f"cannot parse interval '{text}'")
        lo_txt, hi_txt = (p.strip() for p in s[1:-1].split(",", 1))

        def endpoint(t: str) -> Optional[Fraction]:
            if t.lower().lstrip("+-") in ("inf", "infinity", ""):
                return None
            return exact_fraction(t)

        lo, hi = endpoint(lo_txt), endpoint(hi_txt)
        if lo is not None and hi is not None and lo > hi:
            raise ValueError(f"empty interval '{text}'")
        return cls(lo, hi, s[0] == "[" and lo is not None, s[-1] == "]" and hi is not None)

    def contains_weight(self, j: int, k: int) -> bool:
        """Exact test of j/k ∈ P."""
        x = Fraction(j, k)
        if self.lower is not None:
            if x < self.lower or (x == self.lower and not self.lower_closed):
                return False
        if self.upper is not None:
            if x > self.upper or (x == self.upper and not self.upper_closed):
                return False
        return True

    def mask(self, weights: np.ndarray, k: int) -> np.ndarray:
        """Membership of every weight in weights (evaluated once per distinct weight)."""
        weights = np.asarray(weights)
        uniq, inverse = np.unique(weights, return_inverse=True)
        keep = np.array([self.contains_weight(int(j), k) for j in uniq], dtype=bool)
        return keep[inverse] if uniq.size else np.zeros(0, dtype=bool)

    def lattice_weights(self, k: int, j_min: int, j_max: int) -> list[int]:
        return [j for j in range(j_min, j_max + 1) if self.contains_weight(j, k)]

    def __str__(self) -> str:
        lo = "-inf" if self.lower is None else str(self.lower)
        hi = "inf" if self.upper is None else str(self.upper)
        return f"{'[' if self.lower_closed else '('}{lo},{hi}{']' if self.upper_closed else ')'}"


@dataclass(frozen=True, eq=False)
class LevelData:
    E: float
    z: np.ndarray
    z_E: np.ndarray
    tau_E: float
    b_E: float
    d_rho_phi_at_zE: float
    d2_rho_phi_at_zE: float


@dataclass(frozen=True, eq=False)
class WeightBasis:
    """Orthonormal monomial basis of H⁰(M, L^k) graded by circle weight.

    Row i of alphas is a multi-index, weights[i] = Σ b·α and log_sq_coeff[i]
    is the log of the constant making c·z^α a unit-norm section.
    """

    geom: ModelGeometry
    k: int
    alphas: np.ndarray
    weights: np.ndarray
    log_sq_coeff: np.ndarray
    radius: float = math.inf

    def __len__(self) -> int:
        return int(self.weights.size)

    def dim_weight(self, j: int) -> int:
        return int(np.count_nonzero(self.weights == j))

    @property
    def weight_range(self) -> tuple[int, int]:
        return int(self.weights.min()), int(self.weights.max())


@dataclass(frozen=True, eq=False)
class DensityResult:
    k: int
    weights: np.ndarray
    log_values: np.ndarray
    total: LogReal

    def at(self, j: int) -> LogReal:
        hit = np.nonzero(self.weights == j)[0]
        if hit.size == 0:
            return LogReal.zero()
        return LogReal.from_log(float(self.log_values[hit[0]]))

    def probabilities(self) -> np.ndarray:
        """Π_{k,j}/Π_k for every listed weight."""
        if self.total.is_zero():
            return np.zeros_like(self.log_values)
        return np.exp(self.log_values - self.total.log_mag)


@dataclass(frozen=True)
class Prediction:
    value: LogReal
    regime: Regime
    k: int
    energy: Optional[float] = None
    weight: Optional[int] = None
    beta: Optional[float] = None
    point: tuple = ()
    alternate: Optional[LogReal] = None

    def inputs_echo(self) -> dict:
        return {
            "k": self.k,
            "energy": self.energy,
            "weight": self.weight,
            "beta": self.beta,
            "point": [str(c) for c in self.point],
        }


@dataclass(frozen=True, eq=False)
class InterfaceMeasure:
    """Atoms x_j = √k(j/k − E) carrying Π_{k,j}(z_k)/Π_k(z_k)."""

    k: int
    E: float
    beta: float
    atoms: np.ndarray
    masses: np.ndarray
    normalization: LogReal
    curvature: float

    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        values = np.asarray(f(self.atoms), dtype=float)
        return float(np.dot(values, self.masses))


@dataclass(frozen=True)
class WeylSum:
    bergman_normalized: float
    power_normalized: float
    normalization_ratio: float


@dataclass(frozen=True)
class CharacterEval:
    w: complex
    value: complex
    route: CharacterRoute


@dataclass(frozen=True, eq=False)
class RandomSectionSample:
    """Gaussian coefficients for the basis rows listed in indices."""

    k: int
    interval: SpectralInterval
    indices: np.ndarray
    coeffs: np.ndarray
    seed: int
    stream: int = 0

    @property
    def dim(self) -> int:
        return int(self.coeffs.size)


@dataclass(frozen=True, eq=False)
class ZeroSet:
    roots: np.ndarray
    degree: int
    seed: int
    max_residual: float = 0.0

    @property
    def count(self) -> int:
        return int(self.roots.size)


@dataclass(frozen=True, eq=False)
class RadialHistogram:
    edges: np.ndarray
    mean_mass: np.ndarray
    stderr: np.ndarray
    n_samples: int
    k: int
    per_sample_total: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def total(self) -> float:
        return float(np.sum(self.mean_mass))


@dataclass(frozen=True, eq=False)
class DensityTable:
    """Radial zero densities per unit s = log|z| after integrating out the angle."""

    s: np.ndarray
    energy: np.ndarray
    finite_k: np.ndarray
    omega: np.ndarray
    limit: np.ndarray
    flagged: np.ndarray
