import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfflab.geometry import Ball
from gfflab.quadrature import SphereRule, ball_rule, ball_volume, gauss_interval, sphere_area, sphere_points


def test_sphere_area_and_volume():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 12))
def test_sphere_rule_moments_d3(k):
    # E[z^{2k}] = 1 / (2k + 1) and odd moments vanish on S^2
    rule = SphereRule.build(3, 2 * k + 1)
    z = rule.nodes[:, 2]
    assert float(rule.weights @ z ** (2 * k)) == pytest.approx(1 / (2 * k + 1), rel=1e-13)
    assert abs(float(rule.weights @ (z ** (2 * k + 1)))) < 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 20))
def test_sphere_rule_moments_d2(k):
    # E[cos^{2k}] = binom(2k, k) / 4^k on S^1
    rule = SphereRule.build(2, 2 * k)
    c = rule.nodes[:, 0]
    assert float(rule.weights @ c ** (2 * k)) == pytest.approx(math.comb(2 * k, k) / 4**k, rel=1e-13)


def test_sphere_rule_weights_and_csv(tmp_path):
    rule = SphereRule.build(3, 10)
    assert rule.weights.sum() == pytest.approx(1.0)
    assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0)
    path = tmp_path / "rule.csv"
    rule.to_csv(path)
    back = SphereRule.from_csv(path, order=10)
    assert np.array_equal(back.nodes, rule.nodes) and np.array_equal(back.weights, rule.weights)
    with pytest.raises(ValueError):
        SphereRule.build(4, 3)


@pytest.mark.parametrize("d", [2, 3])
def test_ball_rule_volume_and_second_moment(d):
    ball = Ball(d, (0.2,) + (0.0,) * (d - 1), 0.5)
    x, w = ball_rule(ball, 12, 6)
    vol = ball_volume(d) * 0.5**d
    assert w.sum() == pytest.approx(vol, rel=1e-13)
    r2 = np.sum((x - ball.c) ** 2, axis=1)
    assert float(w @ r2) == pytest.approx(vol * d / (d + 2) * 0.25, rel=1e-12)
    xa, wa = ball_rule(ball, 12, 6, r_inner=0.25)
    assert wa.sum() == pytest.approx(ball_volume(d) * (0.5**d - 0.25**d), rel=1e-13)


def test_gauss_interval_and_sphere_points():
    x, w = gauss_interval(0.0, 2.0, 8)
    assert float(w @ x**7) == pytest.approx(2**8 / 8)
    pts, wt = sphere_points(Ball(2, (1.0, 1.0), 2.0), 8)
    assert np.allclose(np.linalg.norm(pts - 1.0, axis=1), 2.0) and wt.sum() == pytest.approx(1.0)
