from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_value: float

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor, "r_value": self.r_value}


def fit_power_law(ks: Sequence[float], errors: Sequence[float]) -> PowerLawFit:
    """Ordinary least squares of log(error) on log(k): error ≈ prefactor · k^exponent."""
    ks = np.asarray(ks, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if ks.size < 2 or ks.size != errors.size:
        raise ValueError("need at least two (k, error) pairs of equal length")
    if np.any(errors <= 0) or np.any(ks <= 0):
        raise ValueError("errors and k must be positive for a log-log fit")
    res = stats.linregress(np.log(ks), np.log(errors))
    return PowerLawFit(float(res.slope), float(np.exp(res.intercept)), float(res.rvalue))


def fit_line(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Slope and intercept of the least-squares line through (x, y)."""
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(res.slope), float(res.intercept)
