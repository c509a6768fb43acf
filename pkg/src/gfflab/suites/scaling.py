"""Scaling covariance: (h^{a+rB}, f((. - a)/r)) has the law of r^{1+d/2} (h^B, f).

With f = eta_c^eps of unit mass, f((. - a)/r) = r^d eta_{a+rc}^{r eps}, so the
squared pairing satisfies K2^{a+rB}(f_r, f_r) = r^{2+d} K2^B(f, f).
"""
from __future__ import annotations

import math

from ..geometry import Ball
from ..pairing import pair_k2
from ..sampler import field_model
from ..stats import covariance_estimate
from ..testfunctions import RadialMollifier
from .common import SuiteContext, trunc

NAME = "scaling"
ANCHOR = "scaling covariance: pairings on a + rB scale by r^(1+d/2)"

R_SCALE = 0.5
SHIFT = {2: (0.2, 0.1), 3: (0.2, 0.1, 0.0)}
CENTRE = {2: (0.2, 0.1), 3: (0.2, 0.1, -0.1)}
EPS = 0.3


def mapped(f: RadialMollifier, ball: Ball) -> RadialMollifier:
    """The unit-mass mollifier whose r^d multiple is f((x - a)/r)."""
    return RadialMollifier(ball.from_unit(f.center), ball.radius * f.eps)


def kernel_identity(f: RadialMollifier, ball: Ball, method: str = "quadrature", spec=None):
    """(lhs, rhs) of K2^{a+rB}(f_r, f_r) = r^{2+d} K2^B(f, f)."""
    d, r = ball.dim, ball.radius
    g = mapped(f, ball)
    lhs = r ** (2 * d) * pair_k2(g, g, ball, method, spec)
    rhs = r ** (2 + d) * pair_k2(f, f, Ball.unit(d), method, spec)
    return lhs, rhs


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    spec = ctx.spec
    tr = trunc(spec)
    f = RadialMollifier(CENTRE[d], EPS)
    unit = Ball.unit(d)
    small = Ball(d, SHIFT[d], R_SCALE)

    lhs, rhs = kernel_identity(f, unit, "spectral", spec)
    ctx.det("kernel identity r = 1, a = 0 (spectral)", ANCHOR, lhs, rhs, abs(lhs - rhs) / rhs,
            ctx.tol("scaling_identity", 1e-10), truncation=tr)
    k2_unit = None
    for method in ("quadrature", "spectral"):
        lhs, rhs = kernel_identity(f, small, method, spec)
        k2_unit = k2_unit if k2_unit is not None else rhs / R_SCALE ** (2 + d)
        ctx.det(f"kernel identity r = {R_SCALE}, a = {SHIFT[d]} ({method})", ANCHOR, lhs, rhs,
                abs(lhs - rhs) / rhs, ctx.tol("scaling_identity", 1e-10),
                truncation=tr if method == "spectral" else (0, 0))

    # two independent ensembles: mapped basis on a + rB and the unit-ball field
    m_small = field_model(spec, small)
    m_unit = field_model(spec, unit)
    x, seed_small = ctx.ensemble(m_small, R_SCALE**d * m_small.functional(mapped(f, small)), "small-ball")
    y, seed_unit = ctx.ensemble(m_unit, m_unit.functional(f), "unit-ball")
    v1, s1 = covariance_estimate(x[:, 0])
    v2, s2 = covariance_estimate(y[:, 0])
    ratio = v1 / v2
    se = ratio * math.sqrt((s1 / v1) ** 2 + (s2 / v2) ** 2)
    ctx.stat(f"Var ratio small/unit vs r^(2+d), r = {R_SCALE}", ANCHOR, ratio, se,
             R_SCALE ** (2 + d), seed=seed_small, truncation=tr,
             note=f"independent ensembles (unit-ball seed {seed_unit}); delta-method standard error")
    ctx.cov_test("Var(h^B, f) vs quadrature K2^B(f, f)", ANCHOR, y[:, 0], y[:, 0], k2_unit,
                 seed=seed_unit, truncation=tr)
    ctx.cov_test("Var(h^{a+rB}, f_r) vs r^(2+d) K2^B(f, f)", ANCHOR, x[:, 0], x[:, 0],
                 k2_unit * R_SCALE ** (2 + d), seed=seed_small, truncation=tr)
