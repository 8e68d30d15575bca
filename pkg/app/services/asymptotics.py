"""Closed-form large-k predictors for equivariant and partial Bergman densities.

Each predictor returns a Prediction in log space; the exact values they are
compared with come from app.services.spectra.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import log_ndtr, ndtr
from scipy.stats import binom

from app.errors import DomainError
from app.models import InterfaceMeasure, ModelGeometry, Prediction, Regime, WeightBasis, WeylSum, exact_fraction
from app.services import geometry, spectra
from utils.fitting import fit_line
from utils.logspace import LogReal
from utils.quadrature import quad_checked

logger = logging.getLogger(__name__)

SCALED_EXPONENTS = ("local", "doubled")
ONSHELL_TOLERANCE = 1e-9


def erf_cdf(x):
    """Standard normal distribution function (2π)^{-1/2}∫_{−∞}^x e^{−t²/2} dt."""
    return ndtr(x)


def lattice_Ek(k: int, E) -> Fraction:
    """Largest j/k with 0 ≤ j/k < E."""
    E = exact_fraction(E)
    if E <= 0:
        raise DomainError(f"energy must be positive, got {E}")
    return Fraction(math.ceil(k * E) - 1, k)


def _point_echo(z) -> tuple:
    return tuple(complex(c) for c in np.atleast_1d(z))


def _require_free(geom: ModelGeometry, z) -> float:
    c = geometry.d_rho_phi(geom, z, 2)
    if geometry.is_fixed_point(geom, z) or c <= 0.0:
        raise DomainError("point is fixed by the circle action")
    return c


def _require_onshell(geom: ModelGeometry, z_E, E: float) -> float:
    c = _require_free(geom, z_E)
    if abs(geometry.hamiltonian(geom, z_E) - E) > ONSHELL_TOLERANCE * max(1.0, abs(E)):
        raise DomainError(f"point is not on the level set H = {E}")
    return c


def _onshell_log(geom: ModelGeometry, k: int, c: float) -> float:
    return (geom.m - 0.5) * math.log(k) + 0.5 * math.log(2.0 / (math.pi * c))


def predict_onshell(geom: ModelGeometry, k: int, z_E) -> Prediction:
    z_E = geometry.as_point(geom, z_E)
    c = _require_free(geom, z_E)
    return Prediction(
        value=LogReal.from_log(_onshell_log(geom, k, c)),
        regime=Regime.ONSHELL,
        k=k,
        energy=geometry.hamiltonian(geom, z_E),
        point=_point_echo(z_E),
    )


def predict_offshell(geom: ModelGeometry, k: int, j: int, z, mode: str = "exact", E: float | None = None) -> Prediction:
    """On-shell constant at z_{j/k} times e^{−k b(z, j/k)}.

    mode="split" expands around a reference energy E instead:
    e^{−k b(z,E)} e^{2τ_E (j − kE)}.
    """
    z = geometry.as_point(geom, z)
    if mode == "exact":
        level = geometry.level_point(geom, z, j / k)
        log_value = _onshell_log(geom, k, level.d2_rho_phi_at_zE) - k * level.b_E
        energy = j / k
    elif mode == "split":
        if E is None:
            raise DomainError("split mode needs a reference energy")
        level = geometry.level_point(geom, z, E)
        log_value = (_onshell_log(geom, k, level.d2_rho_phi_at_zE) - k * level.b_E
                     + 2.0 * level.tau_E * (j - k * E))
        energy = float(E)
    else:
        raise DomainError(f"unknown off-shell mode '{mode}'")
    regime = Regime.ONSHELL if level.tau_E == 0.0 else Regime.OFFSHELL
    return Prediction(LogReal.from_log(log_value), regime, k, energy=energy, weight=j, point=_point_echo(z))


def predict_scaled(geom: ModelGeometry, k: int, z_E, beta: float, exponent: str = "local") -> Prediction:
    """Density at e^{β/√k}·z_E: on-shell constant times e^{−(β²/2)∂²ρφ(z_E)}.

    exponent="doubled" uses e^{−β²∂²ρφ} instead, kept for comparison.
    """
    z_E = geometry.as_point(geom, z_E)
    c = _require_free(geom, z_E)
    if exponent == "local":
        damping = 0.5 * beta * beta * c
    elif exponent == "doubled":
        damping = beta * beta * c
    else:
        raise DomainError(f"unknown exponent variant '{exponent}'")
    return Prediction(
        value=LogReal.from_log(_onshell_log(geom, k, c) - damping),
        regime=Regime.ONSHELL if beta == 0 else Regime.OFFSHELL,
        k=k,
        energy=geometry.hamiltonian(geom, z_E),
        beta=beta,
        point=_point_echo(z_E),
    )


def predict_bulk(geom: ModelGeometry, k: int, E: float, z) -> Prediction:
    z = geometry.as_point(geom, z)
    H = geometry.hamiltonian(geom, z)
    if abs(H - E) <= ONSHELL_TOLERANCE * max(1.0, abs(E)):
        raise DomainError("point lies on the interface H = E; use the interface predictor")
    if H < E:
        return Prediction(spectra.bergman_density_constant(geom, k), Regime.BULK_ALLOWED, k, energy=E,
                          point=_point_echo(z))

    level = geometry.level_point(geom, z, E)
    E_k = lattice_Ek(k, E)
    if E_k == 0:
        raise DomainError(f"no lattice weight below E={E} at k={k}")
    lattice_level = geometry.level_point(geom, z, float(E_k))
    log_value = (_onshell_log(geom, k, level.d2_rho_phi_at_zE) - k * lattice_level.b_E
                 - math.log(-math.expm1(-2.0 * abs(level.tau_E))))
    return Prediction(LogReal.from_log(log_value), Regime.BULK_FORBIDDEN, k, energy=E, point=_point_echo(z))


def predict_interface(geom: ModelGeometry, k: int, E: float, z_E, beta: float) -> Prediction:
    """k^m Erf(−β|∇H|/√π); the alternate field holds k^m Erf(√(4πk)(E − H(z_k))/|∇H|)."""
    z_E = geometry.as_point(geom, z_E)
    c = _require_onshell(geom, z_E, E)
    grad = math.sqrt(math.pi * c)
    z_k = geometry.flow(geom, z_E, beta / math.sqrt(k))
    log_km = geom.m * math.log(k)
    scaled = -beta * grad / math.sqrt(math.pi)
    direct = math.sqrt(4.0 * math.pi * k) * (E - geometry.hamiltonian(geom, z_k)) / grad
    return Prediction(
        value=LogReal.from_log(log_km + float(log_ndtr(scaled))),
        regime=Regime.INTERFACE,
        k=k,
        energy=E,
        beta=beta,
        point=_point_echo(z_E),
        alternate=LogReal.from_log(log_km + float(log_ndtr(direct))),
    )


def smooth_cutoff(t) -> np.ndarray:
    """C^∞ step: 1 on [0, 1], 0 on [2, ∞)."""
    t = np.asarray(t, dtype=float)

    def psi(s):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    up, down = psi(2.0 - t), psi(t - 1.0)
    return up / (up + down)


def tail_mass(basis: WeightBasis, geom: ModelGeometry, z, delta: float, cutoff: str = "sharp") -> float:
    """Share of Π_k(z) carried by weights with |j/k − H(z)| ≥ δ."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    density = spectra.density_by_weight(basis, geom, z)
    offset = np.abs(density.weights / basis.k - geometry.hamiltonian(geom, z))
    if cutoff == "sharp":
        outside = (offset >= delta).astype(float)
    elif cutoff == "smooth":
        outside = 1.0 - smooth_cutoff(offset / delta)
    else:
        raise DomainError(f"unknown cutoff '{cutoff}'")
    return float(np.clip(np.dot(outside, density.probabilities()), 0.0, 1.0))


def _apply(f: Callable[[float], float], xs: np.ndarray) -> np.ndarray:
    return np.vectorize(f, otypes=[float])(xs)


def bernstein_apply(basis: WeightBasis, geom: ModelGeometry, f: Callable[[float], float], z) -> float:
    """Σ_j f(j/k) Π_{k,j}(z)/Π_k(z)."""
    density = spectra.density_by_weight(basis, geom, z)
    return float(np.dot(_apply(f, density.weights / basis.k), density.probabilities()))


def classical_bernstein(f: Callable[[float], float], n: int, x: float) -> float:
    j = np.arange(n + 1)
    return float(np.dot(_apply(f, j / n), binom.pmf(j, n, x)))


def interface_measure(basis: WeightBasis, geom: ModelGeometry, k: int, E: float, z_E, beta: float) -> InterfaceMeasure:
    if basis.k != k:
        raise DomainError(f"basis was built for k={basis.k}, not {k}")
    z_E = geometry.as_point(geom, z_E)
    c = _require_onshell(geom, z_E, E)
    z_k = geometry.flow(geom, z_E, beta / math.sqrt(k))
    density = spectra.density_by_weight(basis, geom, z_k)
    return InterfaceMeasure(
        k=k,
        E=E,
        beta=beta,
        atoms=math.sqrt(k) * (density.weights / k - E),
        masses=density.probabilities(),
        normalization=density.total,
        curvature=c,
    )


def interface_limit_density(x, c: float, beta: float):
    x = np.asarray(x, dtype=float)
    return 2.0 / math.sqrt(2.0 * math.pi * c) * np.exp(-0.5 * (2.0 * x / math.sqrt(c) - beta * math.sqrt(c)) ** 2)


def interface_limit_integral(f: Callable[[float], float], c: float, beta: float,
                             lo: float = -math.inf, hi: float = math.inf) -> float:
    """∫ f dμ_∞ over [lo, hi]."""
    return quad_checked(lambda x: f(x) * float(interface_limit_density(x, c, beta)), lo, hi, rel_tol=1e-12)


def predict_window(c: float, beta: float, lo: float, hi: float) -> float:
    """μ_∞([lo, hi]) in closed form."""
    shift = beta * math.sqrt(c)
    return float(ndtr(2.0 * hi / math.sqrt(c) - shift) - ndtr(2.0 * lo / math.sqrt(c) - shift))


def smooth_weyl_sum(basis: WeightBasis, geom: ModelGeometry, k: int, E: float, z_E, beta: float,
                    f: Callable[[np.ndarray], np.ndarray]) -> WeylSum:
    measure = interface_measure(basis, geom, k, E, z_E, beta)
    value = measure.integrate(f)
    ratio = float(measure.normalization / spectra.bergman_density_constant(geom, k))
    return WeylSum(bergman_normalized=value, power_normalized=value * ratio, normalization_ratio=ratio)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    distances: np.ndarray
    log_ratios: np.ndarray

    @property
    def rate(self) -> float:
        return -self.slope


def fit_offdiagonal_decay(basis: WeightBasis, geom: ModelGeometry, z, x_min: float = 0.5,
                          x_max: float = 4.0, samples: int = 24, route: str = "closed_form") -> DecayFit:
    """Least-squares slope of log(|B_k(z,w)|/Π_k(z)) against √k·dist(z, w).

    Points w move away from z along the first coordinate; for CP^m the
    distance is measured, not prescribed. route="series" sums the kernel
    over the monomial basis instead of using its closed form.
    """
    if route not in ("closed_form", "series"):
        raise ValueError(f"unknown kernel route '{route}'")
    kernel = spectra.offdiag_kernel_series if route == "series" else spectra.offdiag_kernel_mag
    z = geometry.as_point(geom, z)
    k = basis.k
    diagonal = kernel(basis, geom, z, z)
    scale = 1.0 + float(np.sum(np.abs(z) ** 2)) if geom.is_projective else 1.0
    xs, ys = [], []
    for x in np.linspace(x_min, x_max, samples):
        w = z.copy()
        w[0] += x * math.sqrt(math.pi / k) * scale
        d = math.sqrt(k) * geometry.riemannian_distance(geom, z, w)
        xs.append(d)
        ys.append((kernel(basis, geom, z, w) / diagonal).log_mag)
    slope, intercept = fit_line(xs, ys)
    logger.info("off-diagonal decay k=%d slope=%.6g", k, slope)
    return DecayFit(slope, intercept, np.asarray(xs), np.asarray(ys))
