import math

import numpy as np
import pytest
from scipy.stats import poisson

from app.errors import DomainError, ResourceError
from app.models import ModelGeometry, SpectralInterval
from app.services import geometry, spectra


def test_bargmann_fock_onshell_value(bf1, basis_for):
    basis = basis_for(bf1, 100, 1.05)
    value = spectra.equivariant_density(basis, bf1, [1.0], 100)
    assert float(value) == pytest.approx(3.98610, abs=1e-5)
    closed = spectra.bargmann_fock_closed_form(100, 100, 1, 1.0)
    assert value.log_mag == pytest.approx(closed.log_mag, abs=1e-12)


def test_empty_weight_space_is_zero(cp1, basis_for):
    basis = basis_for(cp1, 20)
    assert spectra.equivariant_density(basis, cp1, [0.7], 25).is_zero()
    assert spectra.equivariant_density(basis, cp1, [0.7], -1).is_zero()


def test_origin_keeps_only_constants(bf1, basis_for):
    basis = basis_for(bf1, 30, 1.0)
    assert float(spectra.equivariant_density(basis, bf1, [0.0], 0)) == pytest.approx(30.0)
    assert spectra.equivariant_density(basis, bf1, [0.0], 1).is_zero()


@pytest.mark.parametrize("z", [0.0, 1.0, 2.0 + 1.0j, 3.0])
def test_bargmann_fock_full_density_is_constant(bf1, basis_for, z):
    basis = basis_for(bf1, 50, 3.0)
    assert float(spectra.full_density(basis, bf1, [z])) == pytest.approx(50.0, rel=1e-12)


def test_projective_full_density_is_constant(cp1, cp2, basis_for):
    k = 30
    assert float(spectra.full_density(basis_for(cp1, k), cp1, [1.3 - 0.4j])) == pytest.approx(k + 1, rel=1e-10)
    value = spectra.full_density(basis_for(cp2, k), cp2, [0.2 + 0.5j, 1.1])
    assert float(value) == pytest.approx((k + 1) * (k + 2) / 2, rel=1e-10)
    assert float(spectra.bergman_density_constant(cp2, k)) == pytest.approx((k + 1) * (k + 2) / 2, rel=1e-10)


def test_partial_density_poisson_oracle(bf1, basis_for):
    basis = basis_for(bf1, 100, 1.05)
    value = spectra.partial_density(basis, bf1, [1.0], SpectralInterval.up_to(1))
    assert float(value) == pytest.approx(100 * poisson.cdf(100, 100), rel=1e-10)


def test_partial_density_edge_intervals(cp1, basis_for):
    basis = basis_for(cp1, 20)
    z = [0.8 + 0.1j]
    assert spectra.partial_density(basis, cp1, z, SpectralInterval.half_open(3, 4)).is_zero()
    everything = spectra.partial_density(basis, cp1, z, SpectralInterval.everything())
    assert float(everything) == pytest.approx(float(spectra.full_density(basis, cp1, z)), rel=1e-14)


def test_density_by_weight_probabilities(bf2, basis_for):
    basis = basis_for(bf2, 10, 2.0)
    result = spectra.density_by_weight(basis, bf2, [0.5, 0.4 + 0.2j])
    assert result.probabilities().sum() == pytest.approx(1.0, abs=1e-13)
    assert float(result.total) == pytest.approx(100.0, rel=1e-12)


def test_fourier_extraction_matches_graded_sum(bf1, basis_for):
    basis = basis_for(bf1, 20, 1.05)
    exact = spectra.equivariant_density(basis, bf1, [1.0], 20)
    assert float(spectra.fourier_extract(bf1, 20, 20, [1.0])) == pytest.approx(float(exact), rel=1e-12)


def test_fourier_extraction_outside_weight_range(cp1):
    assert abs(float(spectra.fourier_extract(cp1, 10, 15, [1.0]))) <= 1e-12


def test_fourier_extraction_aliases_below_nyquist(bf1, basis_for):
    """Too few nodes fold other weights onto j."""
    basis = basis_for(bf1, 20, 1.05)
    exact = float(spectra.equivariant_density(basis, bf1, [1.0], 20))
    aliased = float(spectra.fourier_extract(bf1, 20, 20, [1.0], nodes=5))
    assert abs(aliased - exact) > 1e-3 * exact


def test_offdiagonal_kernel(bf1, cp1, basis_for):
    basis = basis_for(bf1, 100, 1.5)
    z = [1.0]
    assert float(spectra.offdiag_kernel_mag(basis, bf1, z, z)) == pytest.approx(100.0, rel=1e-12)
    assert float(spectra.offdiag_kernel_mag(basis, bf1, z, [1.2])) == pytest.approx(100 * math.exp(-2.0), rel=1e-12)

    small = basis_for(bf1, 30, 1.5)
    w = [0.5 + 0.3j]
    closed = spectra.offdiag_kernel_mag(small, bf1, [0.8], w)
    series = spectra.offdiag_kernel_series(small, bf1, [0.8], w)
    assert series.log_mag == pytest.approx(closed.log_mag, abs=1e-10)

    cp = basis_for(cp1, 25)
    closed = spectra.offdiag_kernel_mag(cp, cp1, [0.8], [2.0 - 1.0j])
    series = spectra.offdiag_kernel_series(cp, cp1, [0.8], [2.0 - 1.0j])
    assert series.log_mag == pytest.approx(closed.log_mag, abs=1e-10)


def test_scaling_law_along_the_orbit(cp2, basis_for):
    k, j, alpha = 15, 12, 0.25
    basis = basis_for(cp2, k)
    z = np.array([0.6 + 0.3j, 0.5])
    w = geometry.flow(cp2, z, alpha)
    lhs = spectra.equivariant_density(basis, cp2, w, j).log_mag
    rhs = (spectra.equivariant_density(basis, cp2, z, j).log_mag + 2 * j * alpha
           - k * (geometry.kahler_potential(cp2, w) - geometry.kahler_potential(cp2, z)))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_decay_through_action_integral(bf1, basis_for):
    k, j = 40, 40
    basis = basis_for(bf1, k, 2.0)
    z = [math.exp(0.4)]
    level = geometry.level_point(bf1, z, j / k)
    lhs = spectra.equivariant_density(basis, bf1, z, j).log_mag
    rhs = spectra.equivariant_density(basis, bf1, level.z_E, j).log_mag - k * level.b_E
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_projective_norm_oracles_agree(cp2):
    quad = spectra.build_weight_basis(cp2, 12, norm_oracle="quadrature")
    closed = spectra.build_weight_basis(cp2, 12, norm_oracle="closed_form")
    np.testing.assert_allclose(quad.log_sq_coeff, closed.log_sq_coeff, rtol=0, atol=1e-10)


def test_vanishing_order_selection():
    geom = ModelGeometry.bargmann_fock(2, (1, 0))
    report = spectra.verify_vanishing_order(geom, 10, "0.5")
    assert report.threshold == 5
    assert report.sets_match
    assert report.measured_order == 5
    assert report.ok

    everything = spectra.verify_vanishing_order(geom, 10, 0)
    assert everything.selected == everything.expected > 0

    empty = spectra.verify_vanishing_order(geom, 10, "1.5")
    assert empty.selected == 0
    assert empty.ok


def test_basis_guards(bf1, bf2, monkeypatch):
    basis = spectra.build_weight_basis(bf1, 10, radius=1.0)
    with pytest.raises(DomainError):
        spectra.full_density(basis, bf1, [2.0])
    with pytest.raises(DomainError):
        spectra.full_density(basis, bf2, [0.1, 0.1])
    monkeypatch.setattr(spectra, "BASIS_ENTRY_CAP", 10)
    with pytest.raises(ResourceError):
        spectra.build_weight_basis(bf1, 10)


def test_stabilizer_kills_odd_weights(basis_for):
    """Test that a Z/2 stabilizer leaves only even weights, on both routes"""
    cp_even = ModelGeometry.projective(1, (2,))
    k, z = 20, [0.7 + 0.4j]
    basis = basis_for(cp_even, k)
    assert spectra.equivariant_density(basis, cp_even, z, 7).is_zero()
    even = float(spectra.equivariant_density(basis, cp_even, z, 8))
    assert even > 0
    assert abs(float(spectra.fourier_extract(cp_even, k, 7, z))) <= 1e-12 * even
    assert float(spectra.fourier_extract(cp_even, k, 8, z)) == pytest.approx(even, rel=1e-10)


def test_weight_space_dimensions(basis_for):
    bf_diag = ModelGeometry.bargmann_fock(2)
    basis = basis_for(bf_diag, 10, 1.0)
    assert [basis.dim_weight(j) for j in range(21)] == [j + 1 for j in range(21)]
    assert basis.dim_weight(-1) == 0
