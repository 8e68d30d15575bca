import math

import numpy as np
import pytest

from app.errors import DomainError, RangeError
from app.models import ModelGeometry
from app.services import geometry


def test_kahler_potential_examples(bf1, cp1):
    assert geometry.kahler_potential(bf1, [1.0]) == pytest.approx(1.0)
    assert geometry.kahler_potential(cp1, [1.0]) == pytest.approx(math.log(2.0))
    assert geometry.kahler_potential(cp1, [0.0]) == 0.0


def test_flow_rotates_and_scales(bf1, cp1):
    assert geometry.flow(bf1, [1.0], 1j * math.pi)[0] == pytest.approx(-1.0)
    assert geometry.flow(cp1, [1.0], 0.7)[0] == pytest.approx(math.exp(0.7))


def test_flow_overflow_raises(bf1, cp1):
    with pytest.raises(RangeError):
        geometry.flow(bf1, [1.0], 800.0)
    with pytest.raises(RangeError):
        geometry.flow(cp1, [1.0], 30.0)


def test_rho_derivatives(bf1, cp1):
    assert geometry.d_rho_phi(bf1, [1.0], 2) == pytest.approx(4.0)
    z = np.array([0.6 + 0.2j])
    x = geometry.hamiltonian(cp1, z)
    assert geometry.d_rho_phi(cp1, z, 1) == pytest.approx(2.0 * x)
    assert geometry.d_rho_phi(bf1, [0.0], 1) == 0.0


def test_second_derivative_matches_finite_differences(cp2):
    """∂²ρφ agrees with a centered difference of φ along the flow."""
    z = np.array([0.7 + 0.1j, 0.4 - 0.3j])
    h = 1e-4
    f = [geometry.kahler_potential(cp2, geometry.flow(cp2, z, s)) for s in (-h, 0.0, h)]
    assert geometry.d_rho_phi(cp2, z, 2) == pytest.approx((f[0] - 2 * f[1] + f[2]) / h ** 2, rel=1e-6)


def test_hamiltonian_examples(cp1):
    z = np.array([0.3 + 0.4j, 1.2])
    assert geometry.hamiltonian(ModelGeometry.bargmann_fock(2), z) == pytest.approx(float(np.sum(np.abs(z) ** 2)))
    assert geometry.hamiltonian(cp1, [1.0]) == pytest.approx(0.5)
    assert geometry.hamiltonian(cp1, [0.0]) == 0.0


def test_grad_norm_sq(bf1, cp1):
    assert geometry.grad_norm_sq(bf1, [1.0]) == pytest.approx(4 * math.pi)
    assert geometry.grad_norm_sq(bf1, [0.0]) == 0.0
    z = [1.7]
    x = geometry.hamiltonian(cp1, z)
    assert geometry.grad_norm_sq(cp1, z) == pytest.approx(4 * math.pi * x * (1 - x))


def test_level_point_examples(bf1, cp1):
    level = geometry.level_point(bf1, [math.exp(0.3)], 1.0)
    assert abs(level.z_E[0]) == pytest.approx(1.0)
    assert level.tau_E == pytest.approx(0.3)

    onshell = geometry.level_point(bf1, [1.0], 1.0)
    assert onshell.tau_E == 0.0
    assert onshell.b_E == 0.0

    level = geometry.level_point(cp1, [2.0], 0.5)
    assert abs(level.z_E[0]) == pytest.approx(1.0)
    assert level.tau_E == pytest.approx(math.log(2.0))


def test_level_point_errors(bf1, cp1):
    with pytest.raises(DomainError):
        geometry.level_point(cp1, [1.0], 1.5)
    with pytest.raises(DomainError):
        geometry.level_point(bf1, [0.0], 1.0)


def test_action_integral_examples(bf1):
    assert geometry.action_integral(bf1, [math.exp(0.3)], 1.0) == pytest.approx(0.2221188, abs=1e-7)
    # allowed side stays positive
    assert geometry.action_integral(bf1, [math.exp(-0.3)], 1.0) == pytest.approx(0.1488116, abs=1e-7)
    assert geometry.action_integral(bf1, [1.0], 1.0) == 0.0


@pytest.mark.parametrize("point, E", [([math.exp(0.3)], 1.0), ([math.exp(-0.3)], 1.0), ([2.0], 0.5)])
def test_action_integral_two_routes_agree(bf1, cp1, point, E):
    geom = cp1 if E == 0.5 else bf1
    level = geometry.level_point(geom, point, E)
    formula = geometry.action_integral_formula(geom, point, level)
    quadrature = geometry.action_integral_quadrature(geom, point, level)
    assert formula == pytest.approx(quadrature, abs=1e-9)


def test_action_integral_energy_derivatives(cp1):
    z = [2.0]
    E = 0.3

    def b(e):
        return geometry.action_integral(cp1, z, e)

    assert geometry.action_integral_derivative(cp1, z, E, 1) == pytest.approx(
        geometry.energy_derivative(b, E, 1), rel=1e-6)
    assert geometry.action_integral_derivative(cp1, z, E, 2) == pytest.approx(
        geometry.energy_derivative(b, E, 2, h=1e-3), rel=1e-4)


def test_symplectic_potential(bf1):
    u, rho = geometry.symplectic_potential(bf1, [1.0], 2.0)
    assert rho == pytest.approx(0.0, abs=1e-12)
    assert u == pytest.approx(-1.0)


def test_orbit_energy_range(cp2, bf1):
    assert geometry.orbit_energy_range(cp2, [1.0, 0.0]) == (0.0, 1.0)
    assert geometry.orbit_energy_range(cp2, [1.0, 1.0]) == (0.0, 2.0)
    assert geometry.orbit_energy_range(bf1, [0.5]) == (0.0, math.inf)


def test_riemannian_distance(bf1, cp1):
    assert geometry.riemannian_distance(bf1, [0.0], [3.0 + 4.0j]) == pytest.approx(5.0 / math.sqrt(math.pi))
    assert geometry.riemannian_distance(cp1, [0.3], [0.3]) == pytest.approx(0.0, abs=1e-7)
    # antipodal points on the sphere
    assert geometry.riemannian_distance(cp1, [0.0], [1e8]) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-6)


@pytest.mark.parametrize("name", ["bf2", "cp2"])
def test_flow_group_law(name, request):
    geom = request.getfixturevalue(name)
    z = [0.6 + 0.2j, -0.3 + 0.5j]
    np.testing.assert_allclose(geometry.flow(geom, geometry.flow(geom, z, 0.1), 0.2),
                               geometry.flow(geom, z, 0.3), rtol=1e-13)
    np.testing.assert_allclose(geometry.flow(geom, geometry.flow(geom, z, 0.1 + 0.4j), -0.3 + 1.0j),
                               geometry.flow(geom, z, -0.2 + 1.4j), rtol=1e-13)


@pytest.mark.parametrize("name", ["bf2", "cp2"])
def test_hamiltonian_increases_along_the_flow(name, request):
    """Test that ρ ↦ H(e^ρ·z) is strictly increasing off the fixed points"""
    geom = request.getfixturevalue(name)
    rng = np.random.default_rng(3)
    for _ in range(100):
        moduli = np.exp(rng.uniform(math.log(0.2), math.log(2.0), 2))
        z = moduli * np.exp(2j * math.pi * rng.uniform(size=2))
        rho = rng.uniform(-2.0, 2.0)
        lower = geometry.hamiltonian(geom, geometry.flow(geom, z, rho))
        upper = geometry.hamiltonian(geom, geometry.flow(geom, z, rho + 0.05))
        assert upper > lower


@pytest.mark.parametrize("weights", [(1, 2), (0, 3, 1)])
def test_projective_hamiltonian_sup_is_the_top_weight(weights):
    geom = ModelGeometry.projective(len(weights), weights)
    moduli = np.logspace(-3, 3, 9)
    grid = np.stack(np.meshgrid(*[moduli] * geom.m, indexing="ij"), axis=-1).reshape(-1, geom.m)
    values = np.array([geometry.hamiltonian(geom, z) for z in grid])
    assert values.min() >= 0.0
    assert values.max() <= max(weights)
    assert values.max() >= max(weights) - 1e-5


def _metric_grad_norm_sq(geom, z, h=1e-6):
    """|∇H|² from central differences of H in real coordinates and the Kähler metric."""
    z = np.asarray(z, dtype=complex)
    m = z.size
    x = np.concatenate([z.real, z.imag])

    def H(v):
        return geometry.hamiltonian(geom, v[:m] + 1j * v[m:])

    grad = np.array([(H(x + h * e) - H(x - h * e)) / (2 * h) for e in np.eye(2 * m)])
    if geom.is_projective:
        r2 = float(np.sum(np.abs(z) ** 2))
        hess = np.eye(m) / (1 + r2) - np.outer(z.conj(), z) / (1 + r2) ** 2
    else:
        hess = np.eye(m, dtype=complex)
    metric = hess / math.pi
    A, B = metric.real, metric.imag
    G = np.block([[A, B], [-B, A]])
    return float(grad @ np.linalg.solve(G, grad))


@pytest.mark.parametrize("name, z", [
    ("bf2", [0.6 + 0.2j, -0.3 + 0.5j]),
    ("cp1", [1.7 - 0.4j]),
    ("cp2", [0.6 + 0.2j, -0.3 + 0.5j]),
])
def test_grad_norm_sq_matches_finite_differences(name, z, request):
    geom = request.getfixturevalue(name)
    assert geometry.grad_norm_sq(geom, z) == pytest.approx(_metric_grad_norm_sq(geom, z), rel=1e-6)


@pytest.mark.parametrize("name, E", [("bf1", 1.0), ("bf2", 0.4), ("bf2", 1.5), ("cp2", 0.5), ("cp2", 1.5)])
def test_action_integral_is_legendre_gap(name, E, request):
    """Test that b(z, E) = φ(z) + u(2E; z) with the maximiser at −τ_E"""
    geom = request.getfixturevalue(name)
    z = [math.exp(0.3)] if geom.m == 1 else [0.6 + 0.2j, -0.3 + 0.5j]
    level = geometry.level_point(geom, z, E)
    u, rho_star = geometry.symplectic_potential(geom, z, 2 * E)
    assert level.b_E == pytest.approx(geometry.kahler_potential(geom, z) + u, abs=1e-10)
    assert rho_star == pytest.approx(-level.tau_E, abs=1e-10)


def test_projective_points_outside_the_chart_are_rejected(bf1, cp1):
    with pytest.raises(DomainError):
        geometry.hamiltonian(cp1, [1e9])
    with pytest.raises(DomainError):
        geometry.level_point(cp1, [1e9], 0.5)
    assert geometry.hamiltonian(cp1, [1e8]) == pytest.approx(1.0)
    assert geometry.hamiltonian(bf1, [1e9]) == pytest.approx(1e18)
