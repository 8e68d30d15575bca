"""Exact finite-k Bergman densities on the model geometries.

Every density is accumulated in log space from the graded monomial basis;
e^{kφ} is never formed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from app.errors import DomainError, ResourceError
from app.models import DensityResult, ModelGeometry, SpectralInterval, WeightBasis, exact_fraction
from app.services.geometry import as_point, kahler_potential
from utils.config import BASIS_ENTRY_CAP
from utils.logspace import LogReal, complex_logsumexp, log_sum
from utils.quadrature import quad_checked

logger = logging.getLogger(__name__)

DEFAULT_RADIUS = 2.0
NORM_ORACLES = ("quadrature", "closed_form")


def _count_multi_indices(m: int, n: int) -> int:
    return math.comb(n + m, m)


def multi_indices(m: int, n: int) -> np.ndarray:
    """All α ∈ ℕ^m with |α| ≤ n, one per row."""
    if m == 1:
        return np.arange(n + 1, dtype=np.int64)[:, None]
    blocks = []
    for first in range(n + 1):
        rest = multi_indices(m - 1, n - first)
        blocks.append(np.column_stack([np.full(rest.shape[0], first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def bargmann_fock_truncation(k: int, radius: float) -> int:
    """Largest |α| kept so the Poisson tail beyond it is below 1e-16 of Π_k for ‖z‖ ≤ radius."""
    mean = k * radius * radius
    return int(math.ceil(mean + 12.0 * math.sqrt(mean) + 40.0))


@lru_cache(maxsize=None)
def _log_beta_quadrature(p: int, q: int) -> float:
    """log ∫₀^∞ t^{p−1}(1+t)^{−(p+q)} dt in the variable u = log t."""
    s = p + q
    mode = math.log(p / q)
    width = math.sqrt(s / (p * q))

    def f(u: float) -> float:
        return p * u - s * np.logaddexp(0.0, u)

    peak = f(mode)
    value = quad_checked(lambda u: math.exp(f(u) - peak), mode - 40.0 * width, mode + 40.0 * width,
                         rel_tol=1e-13, points=[mode])
    return peak + math.log(value)


@lru_cache(maxsize=32)
def _projective_log_norms(m: int, k: int, oracle: str) -> np.ndarray:
    """log ‖z^α‖² for |α| ≤ k on CP^m (rows ordered as multi_indices)."""
    alphas = multi_indices(m, k)
    if oracle == "closed_form":
        return gammaln(alphas + 1).sum(axis=1) + gammaln(k - alphas.sum(axis=1) + 1) - gammaln(k + m + 1)
    # iterated radial integrals: S_1 = k+m+1, S_{i+1} = S_i − α_i − 1
    out = np.empty(alphas.shape[0])
    for row, alpha in enumerate(alphas):
        s = k + m + 1
        total = 0.0
        for a in alpha:
            total += _log_beta_quadrature(int(a) + 1, int(s - a - 1))
            s -= int(a) + 1
        out[row] = total
    logger.info("computed %d projective monomial norms for m=%d k=%d", out.size, m, k)
    return out


def build_weight_basis(geom: ModelGeometry, k: int, radius: float | None = None,
                       norm_oracle: str = "quadrature") -> WeightBasis:
    if k < 1:
        raise DomainError(f"tensor power must be positive, got {k}")
    if norm_oracle not in NORM_ORACLES:
        raise DomainError(f"unknown norm oracle '{norm_oracle}'")
    if geom.is_projective:
        degree = k
        radius = math.inf
    else:
        radius = DEFAULT_RADIUS if radius is None else float(radius)
        degree = bargmann_fock_truncation(k, radius)
    count = _count_multi_indices(geom.m, degree)
    if count > BASIS_ENTRY_CAP:
        raise ResourceError(f"basis for m={geom.m}, k={k} needs {count} monomials (cap {BASIS_ENTRY_CAP})")

    alphas = multi_indices(geom.m, degree)
    weights = alphas @ np.asarray(geom.weights, dtype=np.int64)
    if geom.is_projective:
        log_sq_coeff = -_projective_log_norms(geom.m, k, norm_oracle)
    else:
        log_sq_coeff = (alphas.sum(axis=1) + geom.m) * math.log(k) - gammaln(alphas + 1).sum(axis=1)
    return WeightBasis(geom=geom, k=k, alphas=alphas, weights=weights, log_sq_coeff=log_sq_coeff, radius=radius)


def _check_basis(basis: WeightBasis, geom: ModelGeometry, z: np.ndarray) -> None:
    if basis.geom != geom:
        raise DomainError("basis was built for a different geometry")
    if float(np.linalg.norm(z)) > basis.radius * (1.0 + 1e-12):
        raise DomainError(f"point norm {np.linalg.norm(z):.6g} exceeds the basis radius {basis.radius:.6g}")


def _alpha_log_moduli(alphas: np.ndarray, log_coords: np.ndarray) -> np.ndarray:
    """Σ_i α_i·c_i with the convention 0·(−∞) = 0."""
    with np.errstate(invalid="ignore"):
        prod = np.where(alphas > 0, alphas * log_coords, 0.0)
    return prod.sum(axis=1)


def log_terms(basis: WeightBasis, geom: ModelGeometry, z) -> np.ndarray:
    """log of |s_α(z)|² e^{−kφ(z)} for every basis section."""
    z = as_point(geom, z)
    _check_basis(basis, geom, z)
    with np.errstate(divide="ignore"):
        log_abs_sq = 2.0 * np.log(np.abs(z))
    return basis.log_sq_coeff + _alpha_log_moduli(basis.alphas, log_abs_sq) - basis.k * kahler_potential(geom, z)


def _grouped_log_sum(terms: np.ndarray, groups: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inverse = np.unique(groups, return_inverse=True)
    peak = np.full(uniq.size, -np.inf)
    np.maximum.at(peak, inverse, terms)
    shift = np.where(np.isfinite(peak), peak, 0.0)
    acc = np.zeros(uniq.size)
    np.add.at(acc, inverse, np.exp(terms - shift[inverse]))
    with np.errstate(divide="ignore"):
        return uniq, np.log(acc) + shift


def density_by_weight(basis: WeightBasis, geom: ModelGeometry, z) -> DensityResult:
    terms = log_terms(basis, geom, z)
    weights, logs = _grouped_log_sum(terms, basis.weights)
    return DensityResult(k=basis.k, weights=weights, log_values=logs, total=log_sum(terms))


def equivariant_density(basis: WeightBasis, geom: ModelGeometry, z, j: int) -> LogReal:
    terms = log_terms(basis, geom, z)
    return log_sum(terms[basis.weights == j])


def full_density(basis: WeightBasis, geom: ModelGeometry, z) -> LogReal:
    return log_sum(log_terms(basis, geom, z))


def partial_density(basis: WeightBasis, geom: ModelGeometry, z, P: SpectralInterval) -> LogReal:
    terms = log_terms(basis, geom, z)
    return log_sum(terms[P.mask(basis.weights, basis.k)])


def bergman_density_constant(geom: ModelGeometry, k: int) -> LogReal:
    """Π_k in closed form: k^m on Bargmann–Fock space, (k+m)!/k! on CP^m."""
    if geom.is_projective:
        return LogReal.from_log(float(gammaln(k + geom.m + 1) - gammaln(k + 1)))
    return LogReal.from_log(geom.m * math.log(k))


def bargmann_fock_closed_form(k: int, j: int, m: int, r2: float) -> LogReal:
    """Π_{k,j} = k^m (k^j/j!) ‖z‖^{2j} e^{−k‖z‖²} for the diagonal action."""
    if j < 0:
        return LogReal.zero()
    if r2 == 0.0:
        return LogReal.from_log(m * math.log(k)) if j == 0 else LogReal.zero()
    return LogReal.from_log((m + j) * math.log(k) - float(gammaln(j + 1)) + j * math.log(r2) - k * r2)


def _log_kernel_on_orbit(geom: ModelGeometry, k: int, z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """log K_k(e^{iθ}·z, z) − kφ(z) from the closed-form full kernel."""
    r2 = np.abs(z) ** 2
    phases = np.exp(1j * np.outer(theta, geom.b))
    inner = phases @ r2
    phi = kahler_potential(geom, z)
    if geom.is_projective:
        return bergman_density_constant(geom, k).log_mag + k * np.log(1.0 + inner) - k * phi
    return geom.m * math.log(k) + k * inner - k * phi


def fourier_extract(geom: ModelGeometry, k: int, j: int, z, nodes: int | None = None) -> LogReal:
    """Π_{k,j}(z) as the j-th Fourier coefficient of θ ↦ B_k(e^{iθ}z, z), by the trapezoid rule."""
    z = as_point(geom, z)
    n = nodes if nodes is not None else 2 * k * geom.max_weight + 17
    theta = -math.pi + 2.0 * math.pi * np.arange(n) / n
    c = _log_kernel_on_orbit(geom, k, z, theta) - 1j * j * theta
    shift = float(np.max(c.real))
    mean = complex(np.mean(np.exp(c - shift)))
    return LogReal.from_float(mean.real) * LogReal.from_log(shift)


def offdiag_kernel_mag(basis: WeightBasis, geom: ModelGeometry, z, w) -> LogReal:
    """|B_k(z, w)| = |K_k(z, w)| e^{−k(φ(z)+φ(w))/2} from the closed-form kernel."""
    z, w = as_point(geom, z), as_point(geom, w)
    k = basis.k
    inner = complex(np.vdot(w, z))
    half = 0.5 * k * (kahler_potential(geom, z) + kahler_potential(geom, w))
    if geom.is_projective:
        magnitude = abs(1.0 + inner)
        if magnitude == 0.0:
            return LogReal.zero()
        return LogReal.from_log(bergman_density_constant(geom, k).log_mag + k * math.log(magnitude) - half)
    return LogReal.from_log(geom.m * math.log(k) + k * inner.real - half)


def offdiag_kernel_series(basis: WeightBasis, geom: ModelGeometry, z, w) -> LogReal:
    """Same quantity summed over the monomial basis."""
    z, w = as_point(geom, z), as_point(geom, w)
    _check_basis(basis, geom, z)
    _check_basis(basis, geom, w)
    with np.errstate(divide="ignore"):
        log_coords = np.log(z.astype(complex)) + np.conj(np.log(w.astype(complex)))
    with np.errstate(invalid="ignore"):
        moduli = np.where(basis.alphas > 0, basis.alphas * log_coords, 0.0).sum(axis=1)
    total = complex_logsumexp(basis.log_sq_coeff + moduli)
    half = 0.5 * basis.k * (kahler_potential(geom, z) + kahler_potential(geom, w))
    return LogReal.from_log(float(np.real(total)) - half)


@dataclass(frozen=True)
class VanishingOrderReport:
    k: int
    t: Fraction
    threshold: int
    selected: int
    expected: int
    sets_match: bool
    measured_order: int | None

    @property
    def ok(self) -> bool:
        if self.selected == 0:
            return self.sets_match and self.measured_order is None
        return self.sets_match and self.measured_order == self.threshold


def verify_vanishing_order(geom: ModelGeometry, k: int, t, degree: int | None = None) -> VanishingOrderReport:
    """Weight ≥ tk sections are exactly those vanishing to order ⌈tk⌉ along {z_1 = 0}."""
    if geom.is_projective or geom.weights[0] != 1 or any(geom.weights[1:]):
        raise DomainError("vanishing-order check needs Bargmann–Fock weights (1, 0, ..., 0)")
    t = exact_fraction(t)
    degree = k if degree is None else degree
    alphas = multi_indices(geom.m, degree)
    weights = alphas @ np.asarray(geom.weights, dtype=np.int64)
    selected = np.array([Fraction(int(j)) >= t * k for j in weights], dtype=bool)
    threshold = max(0, math.ceil(t * k))
    expected = alphas[:, 0] >= threshold
    sets_match = bool(np.array_equal(selected, expected))

    measured = None
    if selected.any():
        # growth of the selected density as z_1 → 0 along (ε, 1, ..., 1)
        log_sq = (alphas.sum(axis=1) + geom.m) * math.log(k) - gammaln(alphas + 1).sum(axis=1)
        logs = []
        for eps in (1e-4, 1e-5):
            point = np.ones(geom.m)
            point[0] = eps
            la = 2.0 * np.log(point)
            terms = log_sq[selected] + _alpha_log_moduli(alphas[selected], la) - k * float(np.sum(point ** 2))
            logs.append(log_sum(terms).log_mag)
        measured = int(round((logs[0] - logs[1]) / (2.0 * math.log(10.0))))
    return VanishingOrderReport(k, t, threshold, int(selected.sum()), int(expected.sum()), sets_match, measured)
