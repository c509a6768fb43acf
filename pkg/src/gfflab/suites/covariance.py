"""Covariance of mollified pairings against the Green's function oracle.

For radial mollifiers with disjoint supports the mean-value property gives
K2(eta_x, eta_y) = G(x, y) exactly, so the quadrature value of pair_k2 can be
checked against the closed form before it is used as the MC reference.
"""
from __future__ import annotations

import numpy as np

from ..geometry import Ball, green_ball
from ..harmonics import BasisSpec
from ..pairing import pair_k2
from ..sampler import field_model, sample_field
from ..stats import covariance_estimate, mean_estimate
from ..testfunctions import Combination, RadialMollifier
from .common import SuiteContext, rel, suite_spec, trunc

NAME = "covariance"

# angular resolution of a width-eps bump at radius r needs n_max ~ 6 r / eps
SUITE_TRUNCATION = {2: (48, 40), 3: (24, 16)}

ANCHOR_GREEN = "covariance is the zero-boundary Green's function (normalization b = 1)"
ANCHOR_LINEAR = "pairings are linear in the test function"
ANCHOR_SUPPORT = "pairings vanish for test functions supported outside the ball"
ANCHOR_CONT = "continuity of the bilinear form K2 (refinement-stability proxy)"
ANCHOR_SAMPLER = "Karhunen-Loeve sampler is centred with independent replicas"

PAIRS = {
    2: [
        ("centre-interior", (0.0, 0.0), (0.5, 0.0), 0.1),
        ("near-boundary", (0.0, 0.85), (0.3, 0.8), 0.1),
        ("near-diagonal", (-0.3, 0.0), (-0.3, 0.21), 0.1),
        ("generic-a", (0.2, 0.3), (-0.4, -0.2), 0.1),
        ("generic-b", (0.45, 0.45), (-0.1, 0.6), 0.1),
    ],
    3: [
        ("centre-interior", (0.0, 0.0, 0.0), (0.5, 0.0, 0.0), 0.15),
        ("near-boundary", (0.0, 0.7, 0.0), (0.42, 0.56, 0.0), 0.2),
        ("near-diagonal", (-0.3, 0.0, 0.0), (-0.3, 0.32, 0.0), 0.15),
        ("generic-a", (0.2, 0.3, 0.1), (-0.4, -0.2, 0.0), 0.15),
        ("generic-b", (0.3, 0.3, 0.3), (-0.2, 0.4, -0.3), 0.15),
    ],
}
SAME = {2: ((0.1, -0.2), 0.1), 3: ((0.1, -0.2, 0.0), 0.15)}
CENTRED_EPS = 0.2


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    ball = Ball.unit(d)
    spec = suite_spec(ctx.config, d, SUITE_TRUNCATION)
    model = field_model(spec)
    tr = trunc(spec)

    funcs, labels = [], []
    for label, x, y, eps in PAIRS[d]:
        funcs += [RadialMollifier(x, eps), RadialMollifier(y, eps)]
        labels.append(label)
    c_same, eps_same = SAME[d]
    same = RadialMollifier(c_same, eps_same)
    centred = RadialMollifier(np.zeros(d), CENTRED_EPS)
    rows = np.stack([model.functional(f) for f in funcs + [same, centred]])
    vals, seed = ctx.ensemble(model, rows, "battery")

    for k, (label, x, y, eps) in enumerate(PAIRS[d]):
        f, g = funcs[2 * k], funcs[2 * k + 1]
        ref = pair_k2(f, g, ball, "quadrature")
        exact = float(green_ball(np.asarray(x), np.asarray(y), ball))
        ctx.det(f"quadrature oracle equals G(x,y) [{label}]", ANCHOR_GREEN, ref, exact,
                rel(ref, exact), ctx.tol("oracle_rel", 1e-6),
                note="mean-value identity for disjoint radial mollifiers")
        ctx.cov_test(f"Cov(eta_x, eta_y) [{label}]", ANCHOR_GREEN, vals[:, 2 * k], vals[:, 2 * k + 1],
                     ref, seed=seed, truncation=tr, note=f"x={x} y={y} eps={eps}")

    n_pairs = len(PAIRS[d])
    ref_same = pair_k2(same, same, ball, "quadrature")
    ctx.cov_test("Var(eta_z) same-function", ANCHOR_GREEN, vals[:, 2 * n_pairs], vals[:, 2 * n_pairs],
                 ref_same, seed=seed, truncation=tr, note=f"z={c_same} eps={eps_same}")
    ref_c = pair_k2(centred, centred, ball, "quadrature")
    ctx.cov_test("Var(eta_0) centred mollifier", ANCHOR_GREEN, vals[:, -1], vals[:, -1], ref_c,
                 seed=seed, truncation=tr, note=f"eps={CENTRED_EPS}")

    # centring and replica independence
    for k in range(0, 2 * n_pairs, 2):
        est, se = mean_estimate(vals[:, k])
        ctx.stat(f"E(h, eta) = 0 [{labels[k // 2]}]", ANCHOR_SAMPLER, est, se, 0.0, seed=seed,
                 truncation=tr)
    half = len(vals) // 2
    est, se = covariance_estimate(vals[:half, 0], vals[half : 2 * half, 0])
    ctx.stat("Cov across distinct replicas = 0", ANCHOR_SAMPLER, est, se, 0.0, seed=seed,
             truncation=tr, replicas=half)

    _exact_checks(ctx, model, funcs, tr)
    if d == 2:
        _truncation_convergence(ctx, centred)
    _refinement_proxy(ctx)


def _exact_checks(ctx: SuiteContext, model, funcs, tr) -> None:
    d = ctx.dim
    f, g = funcs[0], funcs[3]
    alpha, beta = 1.7, -0.6
    h = sample_field(model.spec, ctx.test_seed("linearity"), 0)
    lhs = model.functional(Combination([(alpha, f), (beta, g)])) @ h.xi
    rhs = alpha * (model.functional(f) @ h.xi) + beta * (model.functional(g) @ h.xi)
    ctx.det("pair(h, a f + b g) = a pair(h, f) + b pair(h, g)", ANCHOR_LINEAR, lhs, rhs,
            abs(lhs - rhs) / max(abs(rhs), 1.0), ctx.tol("linearity", 1e-12), truncation=tr)

    outside = RadialMollifier(np.r_[1.4, np.zeros(d - 1)], 0.2)
    row = model.functional(outside)
    ctx.det("overlaps of a function supported outside the ball", ANCHOR_SUPPORT,
            float(np.max(np.abs(row))), 0.0, float(np.max(np.abs(row))), 0.0, truncation=tr)
    val = float(row @ row)
    ctx.det("Var(h, f) for f supported outside the ball", ANCHOR_SUPPORT, val, 0.0, val, 0.0,
            truncation=tr)


def _truncation_convergence(ctx: SuiteContext, f) -> None:
    ball = Ball.unit(2)
    target = pair_k2(f, f, ball, "quadrature")
    shifted = RadialMollifier((0.3, 0.0), CENTRED_EPS)
    for label, g in (("eta_0", f), ("eta_(0.3,0)", shifted)):
        values = np.array([pair_k2(g, g, ball, "spectral", BasisSpec(2, n, 40)) for n in (0, 8, 16, 24)])
        drop = float(max(0.0, -np.diff(values).min()) / values[-1])
        ctx.det(f"spectral K2({label}, {label}) non-decreasing in N_max", ANCHOR_GREEN, values[-1],
                values[0], drop, 1e-12, truncation=(24, 40),
                note="partial sums of positive terms; residual is the relative decrease")
    value = pair_k2(f, f, ball, "spectral", BasisSpec(2, 24, 40))
    ctx.det("spectral vs quadrature K2(eta_0, eta_0) at (24, 40)", ANCHOR_GREEN, value, target,
            rel(value, target), ctx.tol("truncation_gap", 1e-2), truncation=(24, 40))


def _refinement_proxy(ctx: SuiteContext) -> None:
    """K2(eta_x^eps, eta_y^eps) must settle to a finite limit as eps shrinks."""
    d = ctx.dim
    ball = Ball.unit(d)
    x = np.r_[0.2, np.zeros(d - 1)]
    y = np.r_[-0.1, 0.3, np.zeros(d - 2)]
    vals = [pair_k2(RadialMollifier(x, e), RadialMollifier(y, e), ball, "quadrature")
            for e in (0.12, 0.06, 0.03)]
    spread = (max(vals) - min(vals)) / abs(vals[-1])
    ctx.det("K2 stable under mollifier refinement eps = 0.12, 0.06, 0.03", ANCHOR_CONT, vals[-1],
            float(green_ball(x, y, ball)), spread, ctx.tol("refinement", 1e-6),
            note="proxy: continuity of K2 has no finite test")
