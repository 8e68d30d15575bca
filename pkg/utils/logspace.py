"""Signed log-magnitude scalars and log-sum-exp helpers.

Kernel values at k of a few thousand over- and underflow doubles, so every
density travels as a LogReal and is only turned into a float at the edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable

import numpy as np
from scipy.special import logsumexp


@total_ordering
@dataclass(frozen=True, slots=True)
class LogReal:
    sign: int
    log_mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign != 0 and math.isnan(self.log_mag):
            raise ValueError("log_mag is NaN")

    @classmethod
    def zero(cls) -> "LogReal":
        return cls(0, -math.inf)

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> "LogReal":
        log_mag = float(log_mag)
        if sign == 0 or log_mag == -math.inf:
            return cls.zero()
        return cls(int(sign), log_mag)

    @classmethod
    def from_float(cls, value: float) -> "LogReal":
        value = float(value)
        if value == 0.0:
            return cls.zero()
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    def is_zero(self) -> bool:
        return self.sign == 0

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.78:
            return math.copysign(math.inf, self.sign)
        return self.sign * math.exp(self.log_mag)

    def is_representable(self) -> bool:
        return self.sign == 0 or -745.0 < self.log_mag < 709.78

    def __neg__(self) -> "LogReal":
        return LogReal(-self.sign, self.log_mag)

    def __abs__(self) -> "LogReal":
        return LogReal(abs(self.sign), self.log_mag)

    def __mul__(self, other) -> "LogReal":
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log_mag + other.log_mag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogReal":
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log_mag - other.log_mag)

    def __add__(self, other) -> "LogReal":
        other = _coerce(other)
        return signed_log_sum([self.log_mag, other.log_mag], [self.sign, other.sign])

    __radd__ = __add__

    def __sub__(self, other) -> "LogReal":
        return self + (-_coerce(other))

    def __eq__(self, other) -> bool:
        if not isinstance(other, (LogReal, int, float)):
            return NotImplemented
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        return self.sign == other.sign and self.log_mag == other.log_mag

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        if self.sign != other.sign:
            return self.sign < other.sign
        if self.sign == 0:
            return False
        if self.sign > 0:
            return self.log_mag < other.log_mag
        return self.log_mag > other.log_mag

    def __hash__(self):
        return hash((self.sign, self.log_mag if self.sign else None))

    def to_dict(self) -> dict:
        value = float(self) if self.is_representable() else None
        return {"sign": self.sign, "log_mag": self.log_mag if self.sign else None, "value": value}


def _coerce(value) -> LogReal:
    if isinstance(value, LogReal):
        return value
    return LogReal.from_float(value)


def log_sum(log_terms: Iterable[float] | np.ndarray) -> LogReal:
    """Sum of positive terms given by their logs."""
    arr = np.asarray(log_terms, dtype=float)
    if arr.size == 0 or not np.any(np.isfinite(arr)):
        return LogReal.zero()
    return LogReal.from_log(float(logsumexp(arr[np.isfinite(arr)])))


def signed_log_sum(log_terms, signs) -> LogReal:
    arr = np.asarray(log_terms, dtype=float)
    sg = np.asarray(signs, dtype=float)
    keep = (sg != 0) & np.isfinite(arr)
    if not np.any(keep):
        return LogReal.zero()
    value, sign = logsumexp(arr[keep], b=sg[keep], return_sign=True)
    if sign == 0 or value == -np.inf:
        return LogReal.zero()
    return LogReal.from_log(float(value), int(sign))


def complex_logsumexp(log_terms: np.ndarray, axis: int = -1) -> np.ndarray:
    """log Σ exp(c) for complex logs c, reduced along axis."""
    c = np.asarray(log_terms, dtype=complex)
    # zero terms may carry a NaN phase from -inf·0
    c = np.where(np.isneginf(c.real), complex(-np.inf, 0.0), c)
    with np.errstate(divide="ignore"):
        return logsumexp(c, axis=axis)


def log_relative_error(a: LogReal, b: LogReal) -> float:
    """|log a − log b| for two same-signed values; inf when signs differ."""
    if a.sign != b.sign:
        return math.inf
    if a.sign == 0:
        return 0.0
    return abs(a.log_mag - b.log_mag)
