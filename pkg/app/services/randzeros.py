"""Zeros of Gaussian random sections of S_{k,P} on CP¹.

A section is the polynomial Σ a_α c_α z^α over the basis rows with
weight in kP, a_α i.i.d. standard complex normal and c_α the unit-norm
constants. Radial statistics are taken in the energy coordinate H.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from joblib import Parallel, delayed
from scipy import stats
from scipy.special import logsumexp

from app.errors import DomainError, NumericError
from app.models import (
    DensityTable,
    ModelGeometry,
    RadialHistogram,
    RandomSectionSample,
    SpectralInterval,
    WeightBasis,
    ZeroSet,
)
from app.services import geometry, spectra

logger = logging.getLogger(__name__)

COMPANION_MAX_DEGREE = 300
STENCIL_STEP = 0.02


def _require_projective_line(basis: WeightBasis) -> ModelGeometry:
    geom = basis.geom
    if not geom.is_projective or geom.m != 1:
        raise DomainError("random zeros are implemented on CP¹ only")
    return geom


def _generator(seed: int, stream: int) -> np.random.Generator:
    # Philox keyed by the seed, one spawned stream per sample index
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def sample_section(basis: WeightBasis, P: SpectralInterval, seed: int, stream: int = 0) -> RandomSectionSample:
    _require_projective_line(basis)
    indices = np.nonzero(P.mask(basis.weights, basis.k))[0]
    rng = _generator(seed, stream)
    n = indices.size
    coeffs = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    return RandomSectionSample(k=basis.k, interval=P, indices=indices, coeffs=coeffs, seed=seed, stream=stream)


def aberth_roots(coefs: np.ndarray, max_iter: int = 500, tol: float = 1e-14) -> np.ndarray:
    """All roots of a polynomial (highest degree first) by Aberth–Ehrlich iteration."""
    c = np.asarray(coefs, dtype=complex)
    c = c / c[0]
    n = c.size - 1
    dc = np.polyder(c)
    radius = abs(c[-1]) ** (1.0 / n)
    z = radius * np.exp(2j * math.pi * (np.arange(n) + 0.25) / n)
    for _ in range(max_iter):
        ratio = np.polyval(c, z) / np.polyval(dc, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        step = ratio / (1.0 - ratio * inv.sum(axis=1))
        z = z - step
        if np.max(np.abs(step)) <= tol * max(1.0, float(np.max(np.abs(z)))):
            return z
    raise NumericError(f"Aberth iteration did not converge in {max_iter} steps")


def _relative_residual(c: np.ndarray, t: np.ndarray) -> np.ndarray:
    scale = np.polyval(np.abs(c), np.abs(t))
    return np.abs(np.polyval(c, t)) / scale


def zeros(sample: RandomSectionSample, basis: WeightBasis, tol: float = 1e-8, method: str = "auto") -> ZeroSet:
    _require_projective_line(basis)
    if sample.dim == 0:
        raise DomainError("sample has no coefficients")
    degrees = basis.alphas[sample.indices, 0]
    low, high = int(degrees.min()), int(degrees.max())
    if high < 1:
        raise DomainError("sampled polynomial is constant")

    with np.errstate(divide="ignore"):
        log_mag = 0.5 * basis.log_sq_coeff[sample.indices] + np.log(np.abs(sample.coeffs))
    roots_at_zero = np.zeros(low, dtype=complex)
    if high == low:
        return ZeroSet(roots=roots_at_zero, degree=high, seed=sample.seed)

    # rescale z = s·t so the extreme coefficients have equal size
    order = np.argsort(degrees)
    log_scale = (log_mag[order[0]] - log_mag[order[-1]]) / (high - low)
    shifted = log_mag + (degrees - low) * log_scale
    dense = np.zeros(high - low + 1, dtype=complex)
    dense[degrees - low] = np.exp(shifted - shifted.max()) * np.exp(1j * np.angle(sample.coeffs))
    c = dense[::-1]

    use_companion = method == "companion" or (method == "auto" and high - low <= COMPANION_MAX_DEGREE)
    t = np.roots(c) if use_companion else aberth_roots(c)
    # one Newton polish, kept only where it lowers the residual
    dc = np.polyder(c)
    with np.errstate(divide="ignore", invalid="ignore"):
        polished = t - np.polyval(c, t) / np.polyval(dc, t)
    better = np.isfinite(polished) & (np.abs(np.polyval(c, polished)) < np.abs(np.polyval(c, t)))
    t = np.where(better, polished, t)

    residual = _relative_residual(c, t)
    worst = float(residual.max()) if residual.size else 0.0
    if t.size != high - low or worst > tol:
        logger.error("root extraction failed for seed=%d stream=%d (residual %.3e)", sample.seed, sample.stream, worst)
        raise NumericError(f"root extraction failed for seed {sample.seed}, stream {sample.stream}: residual {worst:.3e}")
    roots = np.concatenate([roots_at_zero, math.exp(log_scale) * t])
    return ZeroSet(roots=roots, degree=high, seed=sample.seed, max_residual=worst)


def sample_zero_sets(basis: WeightBasis, P: SpectralInterval, seed: int, samples: int, threads: int = 1) -> list[ZeroSet]:
    """Zero sets for streams 0..samples−1 of one seed, in stream order."""
    logger.info("sampling %d sections k=%d P=%s seed=%d", samples, basis.k, P, seed)

    def one(stream: int) -> ZeroSet:
        return zeros(sample_section(basis, P, seed, stream), basis)

    return Parallel(n_jobs=threads, prefer="threads")(delayed(one)(i) for i in range(samples))


def root_energies(geom: ModelGeometry, roots: np.ndarray) -> np.ndarray:
    """H at each chart root, b|z|²/(1+|z|²) on CP¹."""
    r2 = np.abs(roots) ** 2
    return geom.b[0] * r2 / (1.0 + r2)


def empirical_radial_measure(zerosets: list[ZeroSet], geom: ModelGeometry, edges, k: int) -> RadialHistogram:
    if not zerosets:
        raise DomainError("need at least one zero set")
    edges = np.asarray(edges, dtype=float)
    counts = np.array([np.histogram(root_energies(geom, zs.roots), bins=edges)[0] for zs in zerosets], dtype=float) / k
    n = counts.shape[0]
    stderr = counts.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(counts.shape[1])
    return RadialHistogram(edges=edges, mean_mass=counts.mean(axis=0), stderr=stderr, n_samples=n, k=k,
                           per_sample_total=counts.sum(axis=1))


def angular_uniformity(zerosets: list[ZeroSet]):
    """Kolmogorov–Smirnov test of the pooled root arguments against the uniform law."""
    roots = np.concatenate([zs.roots for zs in zerosets])
    roots = roots[roots != 0]
    u = (np.angle(roots) / (2.0 * math.pi)) % 1.0
    return stats.kstest(u, "uniform")


def _mean_degree(basis: WeightBasis, geom: ModelGeometry, mask: np.ndarray, energy: float) -> float:
    degrees = basis.alphas[mask, 0].astype(float)
    low, high = geom.energy_range()
    if energy <= low:
        return float(degrees.min())
    if energy >= high:
        return float(degrees.max())
    z = geometry.level_point(geom, np.array([1.0 + 0j]), energy).z_E
    terms = spectra.log_terms(basis, geom, z)[mask]
    return float(np.dot(degrees, np.exp(terms - logsumexp(terms))))


def expected_bin_mass(basis: WeightBasis, geom: ModelGeometry, P: SpectralInterval, edges) -> np.ndarray:
    """Exact (1/k)E[#zeros with H in each bin]: differences of the mean monomial degree."""
    _require_projective_line(basis)
    mask = P.mask(basis.weights, basis.k)
    if not mask.any():
        return np.zeros(len(edges) - 1)
    means = np.array([_mean_degree(basis, geom, mask, float(e)) for e in edges])
    return np.diff(means) / basis.k


def expected_density(basis: WeightBasis, geom: ModelGeometry, P: SpectralInterval, s_grid, h: float = STENCIL_STEP) -> DensityTable:
    """Radial zero densities per unit s = log|z|, angle integrated out.

    finite_k is ½ d²/ds² [(1/k) log Π_{k,P} + φ], the exact expectation;
    limit is ½ d²/ds² [φ(z_E) + 2E τ_E] on the forbidden side and the ω
    density on the allowed side.
    """
    _require_projective_line(basis)
    if P.upper is None:
        raise DomainError("expected density needs a bounded interval")
    k = basis.k
    E = float(P.upper)
    b = geom.b[0]
    s_grid = np.asarray(s_grid, dtype=float)
    s_E = math.log(abs(geometry.level_point(geom, np.array([1.0 + 0j]), E).z_E[0]))

    def point(s: float) -> np.ndarray:
        return np.array([math.exp(s) + 0j])

    def finite(s: float) -> float:
        z = point(s)
        return spectra.partial_density(basis, geom, z, P).log_mag / k + geometry.kahler_potential(geom, z)

    def forbidden(s: float) -> float:
        level = geometry.level_point(geom, point(s), E)
        return geometry.kahler_potential(geom, level.z_E) + 2.0 * E * level.tau_E

    def second_difference(f, s: float) -> float:
        return 0.5 * (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h)

    energy, finite_k, omega, limit, flagged = [], [], [], [], []
    for s in s_grid:
        z = point(s)
        energy.append(geometry.hamiltonian(geom, z))
        finite_k.append(second_difference(finite, s))
        omega.append(0.5 * geometry.d_rho_phi(geom, z, 2) / (b * b))
        near = abs(s - s_E) <= 2.0 * h
        flagged.append(near)
        if near:
            limit.append(math.nan)
        elif s < s_E:
            limit.append(omega[-1])
        else:
            limit.append(second_difference(forbidden, s))
    return DensityTable(
        s=s_grid,
        energy=np.asarray(energy),
        finite_k=np.asarray(finite_k),
        omega=np.asarray(omega),
        limit=np.asarray(limit),
        flagged=np.asarray(flagged, dtype=bool),
    )
