
import numpy as np
import pytest

from gfflab.geometry import Ball, DomainError, scaling_s
from gfflab.harmonics import BasisSpec
from gfflab.pairing import pair_k2
from gfflab.sampler import (
    a_process,
    ensemble_values,
    exact_spherical_averages,
    field_model,
    pair,
    pair_nu,
    read_archive,
    sample_field,
    spherical_average_covariance,
    spherical_average_path,
    spherical_average_rows,
    write_archive,
)
from gfflab.testfunctions import RadialMollifier


def test_samples_are_reproducible_and_immutable():
    spec = BasisSpec(2, 3, 4)
    a, b = sample_field(spec, 5, 2), sample_field(spec, 5, 2)
    assert np.array_equal(a.xi, b.xi)
    assert not np.array_equal(a.xi, sample_field(spec, 5, 3).xi)
    with pytest.raises(ValueError):
        a.xi[0] = 1.0
    with pytest.raises(DomainError):
        type(a)(spec, np.zeros(3))


def test_ensemble_values_match_single_samples():
    spec = BasisSpec(2, 4, 6)
    model = field_model(spec)
    f = RadialMollifier(np.array([0.2, 0.1]), 0.15)
    vals = ensemble_values(model, model.functional(f), seed=9, replicas=5, start=10, block=2)
    assert np.allclose(vals[:, 0], [pair(sample_field(spec, 9, 10 + k), f) for k in range(5)])


@pytest.mark.parametrize("d", [2, 3])
def test_functional_variance_converges_to_kernel(d):
    # sum_k sigma_k^2 <e_k, f>^2 against the direct double integral of f G f
    spec = BasisSpec(d, 40, 60) if d == 2 else BasisSpec(d, 20, 40)
    model = field_model(spec)
    f = RadialMollifier(np.array([0.3, -0.1, 0.0][:d]), 0.2)
    row = model.functional(f)
    assert row @ row == pytest.approx(pair_k2(f, f, Ball.unit(d), "quadrature"), rel=2e-3)


@pytest.mark.parametrize("d", [2, 3])
def test_spherical_average_covariance_from_modes(d):
    radii = np.array([0.2, 0.5, 0.8])
    rows = spherical_average_rows(field_model(BasisSpec(d, 0, 400)), radii)
    ref = scaling_s(np.maximum.outer(radii, radii), d) - scaling_s(1.0, d)
    assert np.allclose(rows @ rows.T, ref, rtol=5e-3)
    assert np.allclose(spherical_average_covariance(radii, d), ref)


def test_exact_averages_have_the_right_law():
    radii = np.array([0.1, 0.4, 0.9])
    z = exact_spherical_averages(radii, 2, seed=3, replicas=40_000)
    emp = np.cov(z.T)
    assert np.allclose(emp, spherical_average_covariance(radii, 2), atol=0.05)
    # variance of log(1/r) at r = 0.1 is 2.30; replica k of the path equals row k
    p = spherical_average_path(radii, "exact", seed=3, replica=7, dim=2)
    assert np.allclose(p.values, z[7])


def test_paths_and_a_process():
    spec = BasisSpec(2, 2, 30)
    h = sample_field(spec, 1, 0)
    radii = np.linspace(0.1, 0.9, 5)
    path = spherical_average_path(radii, field=h)
    assert path.values[2] == pytest.approx(pair_nu(h, 0, 1, 0.5))
    ap = a_process(h, [(1.0, 0, 1), (2.0, 1, 2)], radii)
    ref = [pair_nu(h, 0, 1, r) + 2.0 / r * pair_nu(h, 1, 2, r) for r in radii]
    assert np.allclose(ap.values, ref)
    with pytest.raises(DomainError):
        a_process(h, [(1.0, 3, 1)], radii)
    with pytest.raises(DomainError):
        spherical_average_path([0.5, 0.4], field=h)
    with pytest.raises(DomainError):
        spherical_average_path([0.5, 1.0], field=h)
    with pytest.raises(ValueError):
        spherical_average_path(radii)


@pytest.mark.parametrize("d", [2, 3])
def test_sub_ball_variance_scales(d):
    # G_R(x, y) = R^{2-d} G_1(x / R, y / R); the mollifier rescales with the ball
    spec = BasisSpec(d, 6, 10)
    R = 0.5
    f = RadialMollifier(np.array([0.2, 0.0, 0.0][:d]), 0.1)
    g = RadialMollifier(R * f.center, R * 0.1)
    r1 = field_model(spec).functional(f)
    r2 = field_model(spec, Ball(d, (0.0,) * d, R)).functional(g)
    assert r2 @ r2 == pytest.approx(R ** (2 - d) * (r1 @ r1), rel=1e-10)


def test_archive_round_trip(tmp_path):
    spec = BasisSpec(3, 2, 3)
    ball = Ball(3, (0.1, 0.0, 0.0), 0.5)
    samples = [sample_field(spec, 4, r, ball) for r in (0, 3)]
    path = tmp_path / "a.csv"
    write_archive(path, samples)
    back = read_archive(path)
    assert [s.replica for s in back] == [0, 3]
    assert all(np.array_equal(a.xi, b.xi) for a, b in zip(samples, back))
    assert back[0].ball == ball and back[0].spec == spec
