"""Interval characters Σ e^{jw}, their Euler–MacLaurin form and contour reconstruction of partial densities."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from app.errors import DomainError, NumericError
from app.models import CharacterEval, CharacterRoute, ModelGeometry, SpectralInterval, WeightBasis
from app.services import geometry, spectra
from utils.logspace import LogReal, complex_logsumexp

logger = logging.getLogger(__name__)

SERIES_THRESHOLD = 1e-3


def _on_excluded_lattice(w: complex) -> bool:
    n = round(w.imag / (2.0 * math.pi))
    return n != 0 and abs(w - 2j * math.pi * n) < 1e-12 * max(1.0, abs(w))


def L_factor(w: complex) -> complex:
    """(w/2)/tanh(w/2)."""
    w = complex(w)
    if _on_excluded_lattice(w):
        raise DomainError(f"L(w) has a pole at w={w}")
    if abs(w) < SERIES_THRESHOLD:
        w2 = w * w
        return 1.0 + w2 / 12.0 - w2 * w2 / 720.0 + w2 ** 3 / 30240.0
    return complex((w / 2.0) / np.tanh(w / 2.0))


def _expm1_over(z: complex) -> complex:
    """(e^z − 1)/z, equal to 1 at z = 0."""
    if abs(z) < 1e-5:
        return 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0
    return complex(np.expm1(z) / z)


def lattice_bounds(k: int, P: SpectralInterval) -> tuple[int, int]:
    """Smallest and largest j with j/k ∈ P (empty when lo > hi)."""
    if P.lower is None or P.upper is None:
        raise DomainError(f"interval {P} is unbounded; characters need a bounded interval")
    lo = math.ceil(P.lower * k)
    if lo == P.lower * k and not P.lower_closed:
        lo += 1
    hi = math.floor(P.upper * k)
    if hi == P.upper * k and not P.upper_closed:
        hi -= 1
    return lo, hi


def interval_character(k: int, E, w: complex, route: CharacterRoute | str = CharacterRoute.DIRECT_SUM) -> CharacterEval:
    """χ_{kP}(e^w) = Σ_{j/k ∈ P} e^{jw}; a bare energy E means P = [0, E)."""
    route = CharacterRoute(route)
    P = E if isinstance(E, SpectralInterval) else SpectralInterval.below(E)
    w = complex(w)
    lo, hi = lattice_bounds(k, P)
    if lo > hi:
        return CharacterEval(w, 0j, route)
    n = hi - lo
    if route == CharacterRoute.DIRECT_SUM:
        value = complex(np.sum(np.exp(np.arange(lo, hi + 1) * w)))
    else:
        if _on_excluded_lattice(w):
            raise DomainError(f"closed forms are undefined at w={w}")
        start = complex(np.exp(lo * w))
        if route == CharacterRoute.GEOMETRIC:
            value = (n + 1) * start if w == 0 else start * complex(np.expm1((n + 1) * w) / np.expm1(w))
        else:
            integral = start * n * _expm1_over(n * w)
            value = L_factor(w) * integral + 0.5 * (start + complex(np.exp(hi * w)))
    return CharacterEval(w, value, route)


def _log_character(lattice: np.ndarray, w: np.ndarray) -> np.ndarray:
    return complex_logsumexp(np.outer(w, lattice))


def _contour_setup(basis: WeightBasis, geom: ModelGeometry, k: int, P: SpectralInterval, z, tau: float,
                   nodes: int | None, split: float):
    if basis.k != k:
        raise DomainError(f"basis was built for k={basis.k}, not {k}")
    if not 0.0 <= split <= 1.0:
        raise DomainError("contour split must lie in [0, 1]")
    z = geometry.as_point(geom, z)
    if geometry.is_fixed_point(geom, z):
        raise DomainError("contour reconstruction needs a point on a free orbit")
    # the kernel at the flowed points enters below through Π_{k,j}(z)·e^{−jw}; these calls only check the chart
    geometry.flow(geom, z, -split * tau)
    geometry.flow(geom, z, -(1.0 - split) * tau)

    density = spectra.density_by_weight(basis, geom, z)
    j_min, j_max = basis.weight_range
    lattice = np.asarray(P.lattice_weights(k, j_min, j_max), dtype=float)
    if nodes is None:
        spread = 0 if lattice.size == 0 else int(max(j_max - lattice.min(), lattice.max() - j_min))
        nodes = max(2 * k * geom.max_weight + 17, 2 * spread + 17)
    theta = -math.pi + 2.0 * math.pi * np.arange(nodes) / nodes
    w = tau + 1j * theta
    a, b = split, 1.0 - split
    log_kernel = complex_logsumexp(density.log_values[None, :] - np.outer(w, density.weights) * (a + b))
    return density, lattice, w, log_kernel


def _trapezoid_real(log_integrand: np.ndarray) -> LogReal:
    shift = float(np.max(log_integrand.real))
    mean = float(np.mean(np.exp(log_integrand - shift)).real)
    if mean <= 0.0:
        raise NumericError("contour quadrature lost all significant digits")
    return LogReal.from_log(shift + math.log(mean))


def contour_integrand_peak(basis: WeightBasis, geom: ModelGeometry, k: int, P: SpectralInterval, z, tau: float,
                           nodes: int | None = None, split: float = 0.5) -> float:
    """log of the largest summand magnitude on the contour Re w = τ."""
    _, lattice, w, log_kernel = _contour_setup(basis, geom, k, P, z, tau, nodes, split)
    if lattice.size == 0:
        return -math.inf
    return float(np.max((log_kernel + _log_character(lattice, w)).real))


def contour_partial(basis: WeightBasis, geom: ModelGeometry, k: int, P: SpectralInterval, z, tau: float,
                    nodes: int | None = None, split: float = 0.5) -> LogReal:
    """Π_{k,P}(z) = (2π)^{-1}∫ K_k(e^{−aw}z, e^{−bw̄}z) χ_{kP}(e^w) e^{−kφ(z)} dθ on w = τ + iθ, a + b = 1."""
    _, lattice, w, log_kernel = _contour_setup(basis, geom, k, P, z, tau, nodes, split)
    if lattice.size == 0:
        return LogReal.zero()
    log_integrand = log_kernel + _log_character(lattice, w)
    logger.info("contour tau=%.6g nodes=%d peak log|summand|=%.6g", tau, w.size, float(np.max(log_integrand.real)))
    return _trapezoid_real(log_integrand)


@dataclass(frozen=True)
class BoundarySplit:
    interior: LogReal
    boundary: LogReal


def _log_interval_integral(lo: int, hi: int, w: np.ndarray) -> np.ndarray:
    """log ∫_lo^hi e^{xw} dx for each w."""
    n = hi - lo
    out = np.empty(w.shape, dtype=complex)
    for i, wi in enumerate(w):
        if n == 0:
            out[i] = -np.inf
        elif wi.real >= 0:
            out[i] = hi * wi + np.log(n * _expm1_over(-n * wi))
        else:
            out[i] = lo * wi + np.log(n * _expm1_over(n * wi))
    return out


def contour_boundary_split(basis: WeightBasis, geom: ModelGeometry, k: int, P: SpectralInterval, z, tau: float,
                           nodes: int | None = None) -> BoundarySplit:
    """Split Π_{k,P} into the L(w)-integral part and the endpoint part ½(Π_{k,lo} + Π_{k,hi})."""
    density, lattice, w, log_kernel = _contour_setup(basis, geom, k, P, z, tau, nodes, 0.5)
    if lattice.size == 0:
        return BoundarySplit(LogReal.zero(), LogReal.zero())
    lo, hi = int(lattice.min()), int(lattice.max())
    log_L = np.log(np.array([L_factor(wi) for wi in w]))
    interior = _trapezoid_real(log_kernel + log_L + _log_interval_integral(lo, hi, w)) if hi > lo else LogReal.zero()
    boundary = (density.at(lo) + density.at(hi)) * 0.5
    return BoundarySplit(interior, boundary)
