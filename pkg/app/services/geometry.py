"""Model Kähler geometries: potentials, Hamiltonians, the ℂ* flow and action integrals.

Conventions: ω = (i/2π)∂∂̄φ, H = ½∂ρφ and |∇H|² = π∂²ρφ, where ∂ρ is the
derivative along ρ ↦ e^ρ·z.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from app.errors import DomainError, NumericError, RangeError
from app.models import LevelData, ModelGeometry
from utils.quadrature import quad_checked

logger = logging.getLogger(__name__)

CHART_LIMIT = 1e8
_LOG_OVERFLOW = 700.0


class SymplecticPotential(NamedTuple):
    u: float
    rho_star: float


def as_point(geom: ModelGeometry, z) -> np.ndarray:
    point = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if point.size != geom.m:
        raise DomainError(f"point has {point.size} coordinates, geometry has m={geom.m}")
    if not np.all(np.isfinite(point)):
        raise DomainError("point coordinates must be finite")
    if geom.is_projective and float(np.linalg.norm(point)) > CHART_LIMIT:
        raise DomainError(f"point lies outside the affine chart (|z| > {CHART_LIMIT:g})")
    return point


def _log_abs_sq(z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 2.0 * np.log(np.abs(z))


def kahler_potential(geom: ModelGeometry, z) -> float:
    z = as_point(geom, z)
    r2 = float(np.sum(np.abs(z) ** 2))
    if geom.is_projective:
        return math.log1p(r2)
    return r2


def flow(geom: ModelGeometry, z, w: complex) -> np.ndarray:
    """z_j ↦ e^{b_j w} z_j in the affine chart."""
    z = as_point(geom, z)
    w = complex(w)
    with np.errstate(divide="ignore"):
        log_mod = geom.b * w.real + np.log(np.abs(z))
    if np.any(log_mod > _LOG_OVERFLOW):
        raise RangeError(f"flow by w={w} overflows the chart coordinates")
    out = z * np.exp(geom.b * w)
    if geom.is_projective and float(np.linalg.norm(out)) > CHART_LIMIT:
        raise RangeError(f"flowed point leaves the affine chart (|z| > {CHART_LIMIT:g})")
    return out


def _orbit_moments(geom: ModelGeometry, z: np.ndarray, rho: float) -> tuple[float, float]:
    """(H, ∂²ρφ) at e^ρ·z, computed from log|z_j|² so large |ρ| stays finite."""
    logs = _log_abs_sq(z) + 2.0 * geom.b * rho
    active = np.isfinite(logs)
    b = geom.b[active]
    logs = logs[active]
    if geom.is_projective:
        # weights of the homogeneous coordinates, Z_0 carrying weight 0
        all_logs = np.concatenate(([0.0], logs))
        p = np.exp(all_logs - logsumexp(all_logs))[1:]
        H = float(np.dot(b, p))
        second = float(np.dot(b * b, p)) - H * H
        return H, 4.0 * max(second, 0.0)
    if logs.size and logs.max() > _LOG_OVERFLOW:
        raise RangeError(f"orbit point at rho={rho:g} overflows")
    t = np.exp(logs)
    return float(np.dot(b, t)), 4.0 * float(np.dot(b * b, t))


def d_rho_phi(geom: ModelGeometry, z, order: int = 1) -> float:
    z = as_point(geom, z)
    H, second = _orbit_moments(geom, z, 0.0)
    if order == 1:
        return 2.0 * H
    if order == 2:
        return second
    raise ValueError("order must be 1 or 2")


def hamiltonian(geom: ModelGeometry, z) -> float:
    return 0.5 * d_rho_phi(geom, z, 1)


def grad_norm_sq(geom: ModelGeometry, z) -> float:
    return math.pi * d_rho_phi(geom, z, 2)


def is_fixed_point(geom: ModelGeometry, z) -> bool:
    z = as_point(geom, z)
    return bool(np.all((z == 0) | (geom.b == 0)))


def orbit_energy_range(geom: ModelGeometry, z) -> tuple[float, float]:
    """Open interval of values H takes along the ℝ-orbit of z."""
    z = as_point(geom, z)
    if is_fixed_point(geom, z):
        H = hamiltonian(geom, z)
        return H, H
    if geom.is_projective:
        active = geom.b[z != 0]
        return 0.0, float(active.max())
    return 0.0, math.inf


def riemannian_distance(geom: ModelGeometry, z, w) -> float:
    z, w = as_point(geom, z), as_point(geom, w)
    if geom.is_projective:
        inner = abs(1.0 + np.vdot(w, z))
        norm = math.sqrt((1.0 + float(np.sum(np.abs(z) ** 2))) * (1.0 + float(np.sum(np.abs(w) ** 2))))
        return math.acos(min(1.0, inner / norm)) / math.sqrt(math.pi)
    return float(np.linalg.norm(z - w)) / math.sqrt(math.pi)


def _solve_rho(geom: ModelGeometry, z: np.ndarray, E: float) -> float:
    """Unique ρ with H(e^ρ·z) = E."""
    if is_fixed_point(geom, z):
        raise DomainError("point is fixed by the circle action")
    lo, hi = orbit_energy_range(geom, z)
    if not lo < E < hi:
        raise DomainError(f"energy {E} is not attained on the orbit (range ({lo}, {hi}))")

    def g(rho: float) -> float:
        return _orbit_moments(geom, z, rho)[0] - E

    a, b = -1.0, 1.0
    for _ in range(64):
        if g(a) < 0:
            break
        a *= 2.0
    else:
        raise NumericError(f"could not bracket energy {E} from below")
    for _ in range(64):
        if g(b) > 0:
            break
        b *= 2.0
    else:
        raise NumericError(f"could not bracket energy {E} from above")
    logger.debug("bracket for E=%g: [%g, %g]", E, a, b)

    rho = brentq(g, a, b, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    # one Newton step, dH/dρ = ½∂²ρφ
    H, second = _orbit_moments(geom, z, rho)
    if second > 0:
        polished = rho - (H - E) / (0.5 * second)
        if abs(g(polished)) < abs(H - E):
            rho = polished
    return float(rho)


def _action_increment(geom: ModelGeometry, z_E: np.ndarray, tau: float) -> float:
    """φ(e^τ·z_E) − φ(z_E) without cancellation for small τ."""
    r2 = np.abs(z_E) ** 2
    grow = np.expm1(2.0 * geom.b * tau)
    if geom.is_projective:
        return float(np.log1p(np.dot(r2, grow) / (1.0 + r2.sum())))
    return float(np.dot(r2, grow))


def _action(geom: ModelGeometry, z_E: np.ndarray, tau: float) -> float:
    if tau == 0.0:
        return 0.0
    b = _action_increment(geom, z_E, tau) - tau * d_rho_phi(geom, z_E, 1)
    return max(b, 0.0)


def level_point(geom: ModelGeometry, z, E: float) -> LevelData:
    z = as_point(geom, z)
    E = float(E)
    rho = _solve_rho(geom, z, E)
    z_E = flow(geom, z, rho)
    tau = -rho
    if abs(hamiltonian(geom, z) - E) <= 4 * np.finfo(float).eps * max(1.0, abs(E)):
        tau = 0.0
        z_E = z
    H, second = _orbit_moments(geom, z_E, 0.0)
    return LevelData(
        E=E,
        z=z,
        z_E=z_E,
        tau_E=tau,
        b_E=_action(geom, z_E, tau),
        d_rho_phi_at_zE=2.0 * H,
        d2_rho_phi_at_zE=second,
    )


def action_integral_formula(geom: ModelGeometry, z, level: LevelData) -> float:
    """b_E = φ(z) − φ(z_E) − τ_E ∂ρφ(z_E)."""
    return _action(geom, as_point(geom, level.z_E), level.tau_E)


def action_integral_quadrature(geom: ModelGeometry, z, level: LevelData) -> float:
    """b_E = 2∫₀^τ (H(e^σ z_E) − E) dσ by adaptive quadrature."""
    tau = level.tau_E
    if tau == 0.0:
        return 0.0
    z_E = as_point(geom, level.z_E)

    def integrand(sigma: float) -> float:
        return 2.0 * (_orbit_moments(geom, z_E, sigma)[0] - level.E)

    return quad_checked(integrand, 0.0, tau, rel_tol=1e-13)


def action_integral(geom: ModelGeometry, z, E: float) -> float:
    return level_point(geom, z, E).b_E


def action_integral_derivative(geom: ModelGeometry, z, E: float, order: int = 1) -> float:
    """Closed forms ∂_E b = −2τ_E and ∂²_E b = 4/∂²ρφ(z_E)."""
    level = level_point(geom, z, E)
    if order == 1:
        return -2.0 * level.tau_E
    if order == 2:
        return 4.0 / level.d2_rho_phi_at_zE
    raise ValueError("order must be 1 or 2")


def energy_derivative(f: Callable[[float], float], E: float, order: int = 1, h: float | None = None) -> float:
    """Centered difference in E with h = 1e-5·max(1, |E|)."""
    h = h if h is not None else 1e-5 * max(1.0, abs(E))
    if order == 1:
        return (f(E + h) - f(E - h)) / (2.0 * h)
    if order == 2:
        return (f(E + h) - 2.0 * f(E) + f(E - h)) / (h * h)
    raise ValueError("order must be 1 or 2")


def symplectic_potential(geom: ModelGeometry, z, I: float) -> SymplecticPotential:
    """u(I; z) = sup_ρ (Iρ − φ(e^ρ·z)), attained where ∂ρφ = I."""
    z = as_point(geom, z)
    rho = _solve_rho(geom, z, 0.5 * float(I))
    return SymplecticPotential(float(I) * rho - kahler_potential(geom, flow(geom, z, rho)), rho)
