import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from gfflab.basis_checks import (
    dirichlet_residual,
    e_gram_residual,
    eigen_residual,
    interlacing_violations,
    psi_gram_residual,
    run_basis_checks,
    zero_residual,
)
from gfflab.geometry import DomainError
from gfflab.harmonics import (
    BasisSpec,
    RadialTable,
    check_constancy,
    default_spec,
    eigenfunction,
    eval_psi,
    get_basis,
    multiplicity,
    nu_pair,
    psi_all,
    radial_function,
    radial_zero,
    solid_harmonic,
)
from gfflab.quadrature import SphereRule, sphere_area


def unit_vectors(d, n, seed=0):
    v = np.random.default_rng(seed).normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_multiplicity():
    assert [multiplicity(n, 2) for n in range(4)] == [1, 2, 2, 2]
    assert [multiplicity(n, 3) for n in range(4)] == [1, 3, 5, 7]
    with pytest.raises(DomainError):
        multiplicity(-1, 2)
    with pytest.raises(DomainError):
        multiplicity(1, 4)


@pytest.mark.parametrize("n", range(8))
def test_addition_theorem(n):
    # sum_j psi_j(a) psi_j(b) = (2n+1) P_n(a.b) (d = 3); 2 cos(n gamma) (d = 2, n >= 1)
    a, b = unit_vectors(3, 10, 1), unit_vectors(3, 10, 2)
    s = np.sum(psi_all(n, a, 3)[n] * psi_all(n, b, 3)[n], axis=0)
    assert np.allclose(s, (2 * n + 1) * special.eval_legendre(n, np.sum(a * b, axis=1)), atol=1e-12)
    a2, b2 = unit_vectors(2, 10, 3), unit_vectors(2, 10, 4)
    s2 = np.sum(psi_all(n, a2, 2)[n] * psi_all(n, b2, 2)[n], axis=0)
    ref = 1.0 if n == 0 else 2 * np.cos(n * np.arccos(np.clip(np.sum(a2 * b2, axis=1), -1, 1)))
    assert np.allclose(s2, ref, atol=1e-12)


def test_psi_matches_scipy_spherical_harmonics():
    # real combinations of complex Y_n^m, rescaled to the probability measure
    th = unit_vectors(3, 6, 5)
    polar = np.arccos(th[:, 2])
    az = np.arctan2(th[:, 1], th[:, 0])
    n, m = 3, 2
    Y = special.sph_harm_y(n, m, polar, az) if hasattr(special, "sph_harm_y") else special.sph_harm(m, n, az, polar)
    ref = math.sqrt(4 * math.pi) * math.sqrt(2) * (-1) ** m * Y.real
    got = psi_all(n, th, 3)[n][n + m]
    assert np.allclose(np.abs(got), np.abs(ref), atol=1e-12)


@pytest.mark.parametrize("d,n_max", [(2, 16), (3, 8)])
def test_psi_gram(d, n_max):
    assert psi_gram_residual(d, n_max) < 1e-10


def test_eval_psi_and_solid_harmonic():
    th = unit_vectors(3, 4)
    assert eval_psi(2, 3, th[0]) == pytest.approx(psi_all(2, th[:1], 3)[2][2, 0])
    z = 0.7 * th
    assert solid_harmonic(2, 3, z) == pytest.approx(0.49 * psi_all(2, th, 3)[2][2])
    with pytest.raises(DomainError):
        eval_psi(1, 4, th[0])


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("n", [1, 2, 4])
def test_solid_harmonics_are_harmonic(d, n):
    z = np.array([0.3, -0.2, 0.25][:d])
    h = 1e-3
    for j in range(1, multiplicity(n, d) + 1):
        lap = -2 * d * solid_harmonic(n, j, z)
        for k in range(d):
            e = np.eye(d)[k] * h
            lap += solid_harmonic(n, j, z + e) + solid_harmonic(n, j, z - e)
        assert abs(lap / h**2) < 1e-4  # stencil error h^2 |d^4 u| / 12


def test_bessel_zeros_against_scipy():
    for n in range(6):
        assert np.allclose([radial_zero(n, i, 2) for i in range(1, 9)], special.jn_zeros(n, 8), rtol=1e-13)
    assert radial_zero(0, 3, 3) == pytest.approx(3 * math.pi, rel=1e-14)
    assert radial_zero(1, 1, 3) == pytest.approx(4.493409457909064, rel=1e-13)
    assert radial_zero(2, 1, 3) == pytest.approx(5.763459196894550, rel=1e-13)


@pytest.mark.parametrize("d", [2, 3])
def test_zero_residual_and_interlacing(d):
    spec = default_spec(d)
    assert zero_residual(spec) < 1e-12
    assert interlacing_violations(d) == 0


@pytest.mark.parametrize("d,n,i", [(2, 0, 1), (2, 3, 4), (3, 0, 2), (3, 2, 3)])
def test_eigenfunction_normalized_by_independent_quadrature(d, n, i):
    e = eigenfunction(n, 1, i, d)
    val, _ = integrate.quad(lambda r: e.radial(r) ** 2 * r ** (d - 1), 0, 1, epsabs=1e-14, limit=200)
    assert sphere_area(d) * val == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_eigenfunction_gram_and_equation(d):
    assert e_gram_residual(d) < 1e-8
    assert eigen_residual(default_spec(d)) < 1e-3
    assert dirichlet_residual(default_spec(d)) < 1e-10


def test_eigenfunction_equation_direct():
    e = eigenfunction(2, 3, 2, 3)
    z, h = np.array([0.2, 0.3, -0.1]), 1e-3
    lap = -6 * e(z)
    for k in range(3):
        lap += e(z + h * np.eye(3)[k]) + e(z - h * np.eye(3)[k])
    assert lap / h**2 == pytest.approx(-e.eigenvalue * e(z), rel=1e-3)
    assert e(np.array([0.0, 0.0, 1.5])) == 0.0


@pytest.mark.parametrize("d", [2, 3])
def test_basis_layout(d):
    b = get_basis(BasisSpec(d, 3, 5))
    t = b.table
    assert b.size == BasisSpec(d, 3, 5).mode_count == len(t["n"])
    k = b.index(2, 2, 4)
    assert (t["n"][k], t["j"][k], t["i"][k]) == (2, 2, 4)
    assert b.mode_slice(1, 1) == slice(b.index(1, 1, 1), b.index(1, 1, 1) + 5)
    pts = 0.5 * unit_vectors(d, 3)
    E = b.evaluate(pts)
    ef = b.eigenfunction(2, 2, 4)
    assert E[k] == pytest.approx(ef(pts))
    assert np.allclose(b.overlaps(pts, np.array([1.0, 2.0, -1.0])), E @ [1.0, 2.0, -1.0])
    with pytest.raises(DomainError):
        b.index(4, 1, 1)


def test_radial_table_accuracy():
    tab = RadialTable.build_all(6, 2, 60.0)
    x = np.linspace(0, 60, 2001)
    for n in (0, 3, 6):
        assert np.max(np.abs(tab[n](x) - special.jv(n, x))) < 1e-12
    tab3 = RadialTable.build_all(4, 3, 40.0)
    assert np.max(np.abs(tab3[4](x[x <= 40]) - special.spherical_jn(4, x[x <= 40]))) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_manifest(tmp_path, d):
    b = get_basis(BasisSpec(d, 0, 6))
    path = tmp_path / "m.csv"
    b.write_manifest(path, header_comment="seed=1")
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=1" and lines[1] == "n,j,i,alpha,lambda,norm_const"
    assert len(lines) - 2 == 6 and all(line.startswith("0,1,") for line in lines[2:])


@pytest.mark.parametrize("d", [2, 3])
def test_nu_pair_of_eigenfunction_closed_form(d):
    r = 0.6
    for n, j, i in ((0, 1, 2), (1, 1, 1), (2, 2, 3)):
        e = eigenfunction(n, j, i, d)
        for n2, j2 in ((n, j), (n + 1, 1), (n, 2 if multiplicity(n, d) > 1 else 1)):
            got = nu_pair(n2, j2, r, e, d)
            ref = e.norm * radial_function(n, e.alpha * r, d) if (n2, j2) == (n, j) else 0.0
            assert got == pytest.approx(ref, abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 4), st.floats(0.1, 0.9))
def test_nu_pair_of_solid_harmonic(n, r):
    for j in range(1, multiplicity(n, 3) + 1):
        val = nu_pair(n, j, r, lambda x: solid_harmonic(n, j, x, 3), 3, 2 * n + 4)
        assert val == pytest.approx(r**n, rel=1e-10)


def test_check_constancy_distinguishes_harmonic():
    radii = [0.2, 0.4, 0.6, 0.8]
    assert check_constancy(1, 1, lambda x: solid_harmonic(1, 1, x, 2), radii, 2) < 1e-12
    nonharmonic = lambda x: np.sum(x * x, axis=-1)
    assert check_constancy(0, 1, nonharmonic, radii, 2) > 0.1
    with pytest.raises(DomainError):
        nu_pair(0, 1, 1.0, nonharmonic, 2)


def test_run_basis_checks_all_pass_and_tolerance_override():
    checks = run_basis_checks(BasisSpec(2, 6, 8))
    assert all(c.passed for c in checks)
    tight = run_basis_checks(BasisSpec(2, 6, 8), {"eigen_residual": 1e-30})
    assert not [c for c in tight if c.name.startswith("eigen-equation")][0].passed


def test_sphere_rule_used_by_gram_is_exact():
    rule = SphereRule.build(3, 16)
    P = np.concatenate(psi_all(8, rule.nodes, 3))
    assert np.allclose((P * rule.weights) @ P.T, np.eye(len(P)), atol=1e-12)
