import math

import numpy as np
import pytest

from gfflab.geometry import Ball, DomainError, green_ball, green_unit_ball, scaling_s
from gfflab.harmonics import BasisSpec, get_basis
from gfflab.pairing import _pair_k2_polar, _pair_k2_shell, pair_k2, spectral_weights, sphere_pair_covariance, tensor_pair_k2
from gfflab.testfunctions import AnnularBump, QuadratureError, RadialMollifier


def degree_n_covariance(n, r1, r2, d):
    """Degree-n coefficient of G in the psi basis (independent series oracle)."""
    lo, hi = min(r1, r2), max(r1, r2)
    if d == 2:
        if n == 0:
            return -math.log(hi)
        return ((lo / hi) ** n - (r1 * r2) ** n) / (2 * n)
    return (lo**n / hi ** (n + 1) - (r1 * r2) ** n) / (2 * n + 1)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("n", [0, 1, 3])
@pytest.mark.parametrize("radii", [(0.3, 0.6), (0.5, 0.5), (0.8, 0.2)])
def test_sphere_pair_covariance_series(d, n, radii):
    got = sphere_pair_covariance(n, *radii, d)
    ref = degree_n_covariance(n, *radii, d)
    if d == 3 and n == 0:
        ref = scaling_s(max(radii), 3) - 1.0
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_disjoint_mollifiers_give_green_function(d):
    # mean-value property: K2(eta_x, eta_y) = G(x, y) when the supports are disjoint
    x, y = np.array([0.3, 0.1, 0.0][:d]), np.array([-0.2, -0.3, 0.1][:d])
    f, g = RadialMollifier(x, 0.1), RadialMollifier(y, 0.15)
    ball = Ball.unit(d)
    ref = float(green_unit_ball(x, y, d))
    assert pair_k2(f, g, ball, "quadrature") == pytest.approx(ref, rel=1e-8)
    assert tensor_pair_k2(f, g, ball) == pytest.approx(ref, rel=1e-8)
    spec = BasisSpec(d, 40, 60) if d == 2 else BasisSpec(d, 20, 40)
    assert pair_k2(f, g, ball, "spectral", spec) == pytest.approx(ref, rel=2e-3)


def test_self_pairing_radial_vs_polar_paths():
    # a centred mollifier on the unit ball takes the radial path; a shifted ball forces the polar one
    f = RadialMollifier(np.zeros(2), 0.2)
    radial = pair_k2(f, f, Ball.unit(2), "quadrature")
    # closed form from the sphere-average reduction: s(max) - s(1) integrated against F x F
    shifted = pair_k2(f, f, Ball(2, (0.0, 0.0), 1.0), "quadrature")
    assert radial == pytest.approx(shifted)
    g = RadialMollifier(np.array([0.05, 0.0]), 0.2)
    polar = pair_k2(g, g, Ball(2, (0.05, 0.0), 1.0), "quadrature")
    assert polar == pytest.approx(radial, rel=1e-7)


@pytest.mark.parametrize("d", [2, 3])
def test_quadrature_vs_spectral_overlapping_supports(d):
    f = RadialMollifier(np.array([0.2, 0.1, 0.0][:d]), 0.2)
    g = RadialMollifier(np.array([0.3, 0.0, 0.05][:d]), 0.15)
    ball = Ball.unit(d)
    q = pair_k2(f, g, ball, "quadrature")
    spec = BasisSpec(d, 60, 80) if d == 2 else BasisSpec(d, 24, 40)
    assert pair_k2(f, g, ball, "spectral", spec) == pytest.approx(q, rel=2e-3)
    assert pair_k2(g, f, ball, "quadrature") == pytest.approx(q, rel=1e-12)


def test_shell_potential_path_against_polar_path():
    # two independent treatments of the diagonal singularity
    ball = Ball.unit(2)
    f = RadialMollifier(np.array([0.2, 0.1]), 0.2)
    g = RadialMollifier(np.array([0.3, 0.0]), 0.15)
    assert _pair_k2_shell(f, g, ball) == pytest.approx(_pair_k2_polar(f, g, ball), rel=1e-7)


def test_shell_potential_path_is_converged_d3():
    ball = Ball.unit(3)
    f = AnnularBump(np.array([0.1, 0.0, 0.0]), 0.1, 0.3)
    g = RadialMollifier(np.array([0.3, 0.0, 0.05]), 0.15)
    assert _pair_k2_shell(f, g, ball) == pytest.approx(_pair_k2_shell(f, g, ball, resolve=60.0), rel=1e-9)


def test_annular_bumps_are_radial_pairings():
    ball = Ball.unit(3)
    a = AnnularBump(np.zeros(3), 0.1, 0.3)
    b = AnnularBump(np.zeros(3), 0.5, 0.7)
    # disjoint shells: the sphere average of G is s(max r) - s(1), constant across the inner shell
    val = pair_k2(a, b, ball, "quadrature")
    rho = np.linspace(0.5, 0.7, 2001)
    dens = b.radial_density(rho)
    ref = np.trapezoid(dens * (1 / rho - 1), rho) if hasattr(np, "trapezoid") else np.trapz(dens * (1 / rho - 1), rho)
    assert val == pytest.approx(ref, rel=1e-6)
    assert val > 0


def test_positive_definite_on_random_combinations():
    ball = Ball.unit(2)
    fs = [RadialMollifier(np.array(c), 0.1) for c in ((0.0, 0.0), (0.3, 0.0), (0.0, 0.4), (-0.3, -0.3))]
    K = np.array([[pair_k2(f, g, ball, "quadrature") for g in fs] for f in fs])
    assert np.allclose(K, K.T, rtol=1e-9)
    assert np.linalg.eigvalsh(K).min() > 0


def test_spectral_weights_scale_with_radius():
    basis = get_basis(BasisSpec(2, 2, 3))
    w1 = spectral_weights(basis, Ball.unit(2))
    w2 = spectral_weights(basis, Ball(2, (0.0, 0.0), 0.5))
    assert np.allclose(w2, 0.25 * w1)
    assert w1[0] == pytest.approx(2 * math.pi / basis.eigenvalues[0])


def test_sub_ball_pairing_is_scaled_green():
    sub = Ball(3, (0.2, 0.0, 0.0), 0.5)
    x, y = np.array([0.3, 0.1, 0.0]), np.array([0.05, -0.1, 0.1])
    f, g = RadialMollifier(x, 0.05), RadialMollifier(y, 0.05)
    assert pair_k2(f, g, sub, "quadrature") == pytest.approx(float(green_ball(x, y, sub)), rel=1e-8)


def test_errors():
    ball = Ball.unit(2)
    f = RadialMollifier(np.array([0.95, 0.0]), 0.1)
    g = RadialMollifier(np.zeros(2), 0.1)
    with pytest.raises(DomainError):
        pair_k2(f, g, ball)
    with pytest.raises(ValueError):
        pair_k2(g, g, ball, "monte-carlo")
    with pytest.raises(QuadratureError):
        tensor_pair_k2(g, g, ball)
    with pytest.raises(DomainError):
        sphere_pair_covariance(0, 1.0, 0.5, 2)
