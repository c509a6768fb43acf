"""Domain Markov property: h = h_sub + phi on sub-balls, tested on spectral field samples.

phi(z) is the Poisson extension of the field's boundary values on the inner
sphere and (h_sub, f) = (h, f - mu_f) with mu_f the balayage of f. The checks:
h_sub has the Green's function of the inner ball as covariance, phi has
covariance G^B - G^inner and is uncorrelated with h_sub, phi is harmonic, and
nested harmonic parts have independent increments with the scaling variance.

Off-center inner balls excite every angular degree and the truncation bias of
the balayage decays slowly in N_max; those tests run in d = 2 at OFFCENTER_TRUNCATION.
Concentric tests only involve n = 0 modes and use a (0, RADIAL_K) basis.
"""
from __future__ import annotations

import numpy as np

from ..geometry import Ball, green_ball, harmonic_diff_kernel, scaling_s
from ..harmonics import BasisSpec
from ..markov import (
    bulk_functional,
    bulk_pairing,
    harmonic_part_rows,
    increment_functional,
    integrated_harmonic_part,
    mean_value_nodes,
    poisson_measure,
    remainder_functional,
)
from ..pairing import pair_k2
from ..sampler import field_model, pair, sample_field
from ..stats import jackknife, normality_pvalue
from ..testfunctions import AnnularBump, Combination, RadialMollifier
from .common import RADIAL_K, SuiteContext, fmt_point, rel, trunc, unit_vec

NAME = "dmp"
ANCHOR_SUB = "h_sub is a zero-boundary GFF of the inner ball (covariance G^inner)"
ANCHOR_PHI = "phi has covariance G^B - G^inner"
ANCHOR_IND = "h_sub and phi are independent"
ANCHOR_HARM = "phi is a.s. harmonic in the inner ball"
ANCHOR_MULTI = "disjoint balls: sub-fields independent of each other and of the harmonic remainder"
ANCHOR_NEST = "nested harmonic parts have independent increments with variance s(r_in) - s(r_mid)"
ANCHOR_ALG = "h = h_sub + phi (reconstruction) and phi is independent of the quadrature"

OFFCENTER_TRUNCATION = (128, 80)
INNER = ((0.3, 0.0), 0.4)
OFF_FUNCS = (((0.3, 0.0), 0.15), ((0.45, 0.12), 0.1), ((0.15, -0.15), 0.1), ((0.3, 0.25), 0.08))
OFF_COV = ((0, 0), (1, 1), (3, 3), (0, 3), (1, 2))
OFF_POINTS = ((0.3, 0.0), (0.4, 0.1), (0.2, -0.1), (0.35, -0.2), (0.1, 0.05))
PHI_VAR_POINTS = (0, 1)
MULTI_BALLS = (((0.0, 0.0), 0.3), ((0.6, 0.0), 0.2))
MULTI_FUNCS = (((0.05, 0.0), 0.1), ((0.6, 0.05), 0.08))

CONC_RADIUS = 0.5
CONC_FUNCS = ((0.0, 0.3), (0.1, 0.45), (0.3, 0.48))
CONC_COV = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2))
NEST_RADII = (0.25, 0.5, 1.0)

MEAN_VALUE_POINTS = 10
MEAN_VALUE_ORDER = 24
MEAN_VALUE_FRACTION = 0.3
HARMONIC_TOL = 1e-8
RECON_TOL = 1e-12
UNIQUE_TOL = 1e-6


def inner_ball(d: int) -> Ball:
    c, r = INNER
    return Ball(d, unit_vec(d, *c), r)


def offcenter_design(d: int):
    """Functions, evaluation points and covariance references for the off-center inner ball."""
    inner = inner_ball(d)
    fs = [RadialMollifier(unit_vec(d, *c), e) for c, e in OFF_FUNCS]
    tests = []
    for a, b in OFF_COV:
        ref = pair_k2(fs[a], fs[b], inner, "quadrature")
        tests.append((a, b, ref))
    zs = np.array([unit_vec(d, *z) for z in OFF_POINTS])
    return inner, fs, tests, zs


def multi_design(d: int):
    balls = [Ball(d, unit_vec(d, *c), r) for c, r in MULTI_BALLS]
    gs = [RadialMollifier(unit_vec(d, *c), e) for c, e in MULTI_FUNCS]
    unit = Ball.unit(d)
    k_unit = sum(pair_k2(gs[a], gs[b], unit, "quadrature") for a in range(2) for b in range(2))
    k_sub = sum(pair_k2(g, g, b, "quadrature") for g, b in zip(gs, balls))
    return balls, gs, k_unit - k_sub


def concentric_functions(d: int):
    return [AnnularBump(np.zeros(d), a, b) for a, b in CONC_FUNCS]


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    if d == 2:
        _offcenter(ctx)
    _concentric(ctx)
    _row_level(ctx)


def _offcenter(ctx: SuiteContext) -> None:
    d = ctx.dim
    spec = BasisSpec(d, *OFFCENTER_TRUNCATION)
    tr = trunc(spec)
    model = field_model(spec)
    inner, fs, tests, zs = offcenter_design(d)
    balls, gs, rem_var = multi_design(d)
    rem = remainder_functional(balls, Combination([(1.0, gs[0]), (1.0, gs[1])]), spec)
    rows = np.concatenate([
        np.stack([model.functional(bulk_functional(inner, f, spec)) for f in fs]),
        harmonic_part_rows(model, inner, zs),
        np.stack([model.functional(bulk_functional(b, g, spec)) for b, g in zip(balls, gs)]),
        model.functional(rem)[None],
    ])
    vals, seed = ctx.ensemble(model, rows, "offcenter")
    nf, nz = len(fs), len(zs)
    bulk, phi = vals[:, :nf], vals[:, nf : nf + nz]
    sub1, sub2, remv = vals[:, nf + nz], vals[:, nf + nz + 1], vals[:, nf + nz + 2]
    where = f"inner ball radius {inner.radius} at {fmt_point(inner.c)}"

    for a, b, ref in tests:
        fa, fb = fs[a], fs[b]
        label = f"eta_{fmt_point(fa.center)}^{fa.eps}"
        if a != b:
            label += f", eta_{fmt_point(fb.center)}^{fb.eps}"
            exact = float(green_ball(fa.center, fb.center, inner))
            ctx.det(f"quadrature G^inner oracle equals G^inner(x, y) [{label}]", ANCHOR_SUB, ref, exact,
                    rel(ref, exact), ctx.tol("oracle_rel", 1e-6))
        ctx.cov_test(f"Cov(h_sub) vs K2^inner [{label}]", ANCHOR_SUB, bulk[:, a], bulk[:, b], ref, seed=seed,
                     truncation=tr, note=where)
    for k in PHI_VAR_POINTS:
        z = zs[k]
        ref = float(harmonic_diff_kernel(z, z, Ball.unit(d), inner))
        ctx.cov_test(f"Var phi{fmt_point(z)} vs G^B - G^inner", ANCHOR_PHI, phi[:, k], phi[:, k], ref,
                     seed=seed, truncation=tr, note=where)
    for k, z in enumerate(zs):
        a = k % nf
        ctx.cov_test(f"Cov(phi{fmt_point(z)}, h_sub eta_{fmt_point(fs[a].center)}) = 0", ANCHOR_IND, phi[:, k],
                     bulk[:, a], 0.0, seed=seed, truncation=tr, note=where)

    note = "; ".join(f"B{i + 1} radius {b.radius} at {fmt_point(b.c)}" for i, b in enumerate(balls))
    ctx.cov_test("Cov(h_sub^B1, h_sub^B2) = 0", ANCHOR_MULTI, sub1, sub2, 0.0, seed=seed, truncation=tr,
                 note=note)
    ctx.cov_test("Cov(remainder, h_sub^B1) = 0", ANCHOR_MULTI, remv, sub1, 0.0, seed=seed, truncation=tr,
                 note=note)
    ctx.cov_test("Cov(remainder, h_sub^B2) = 0", ANCHOR_MULTI, remv, sub2, 0.0, seed=seed, truncation=tr,
                 note=note)
    ctx.cov_test("Var remainder vs K2^B - K2^B1 - K2^B2", ANCHOR_MULTI, remv, remv, rem_var, seed=seed,
                 truncation=tr, note=note)


def _concentric(ctx: SuiteContext) -> None:
    d = ctx.dim
    spec = BasisSpec(d, 0, RADIAL_K)
    tr = trunc(spec)
    model = field_model(spec)
    unit = Ball.unit(d)
    inner = Ball(d, np.zeros(d), CONC_RADIUS)
    fs = concentric_functions(d)
    origin = np.zeros(d)
    nest = [Ball(d, origin, r) for r in NEST_RADII]
    rows = np.concatenate([
        np.stack([model.functional(bulk_functional(inner, f, spec)) for f in fs]),
        np.stack([model.functional(poisson_measure(b, origin, spec)) for b in nest[:2]]),
        np.stack([model.functional(increment_functional(nest[i], nest[i + 1], origin, spec))
                  for i in range(2)]),
    ])
    vals, seed = ctx.ensemble(model, rows, "concentric")
    nf = len(fs)
    bulk = vals[:, :nf]
    phi_q, phi_h = vals[:, nf], vals[:, nf + 1]
    inc_lo, inc_hi = vals[:, nf + 2], vals[:, nf + 3]
    where = f"concentric inner ball radius {CONC_RADIUS}"

    for a, b in CONC_COV:
        ref = pair_k2(fs[a], fs[b], inner, "quadrature")
        label = f"f_{a + 1}" if a == b else f"f_{a + 1}, f_{b + 1}"
        ctx.cov_test(f"Cov(h_sub) vs K2^inner, concentric [{label}]", ANCHOR_SUB, bulk[:, a], bulk[:, b], ref,
                     seed=seed, truncation=tr,
                     note=where + "; f_k radial bumps on " + ", ".join(str(c) for c in CONC_FUNCS))
    ref = float(harmonic_diff_kernel(origin, origin, unit, inner))
    ctx.cov_test("Var phi(0) vs G^B - G^inner, concentric", ANCHOR_PHI, phi_h, phi_h, ref, seed=seed,
                 truncation=tr, note=where)
    for a in range(nf):
        ctx.cov_test(f"Cov(phi(0), h_sub f_{a + 1}) = 0, concentric", ANCHOR_IND, phi_h, bulk[:, a], 0.0,
                     seed=seed, truncation=tr, note=where)

    r_lo, r_mid, r_hi = NEST_RADII
    v_hi = float(scaling_s(r_mid, d) - scaling_s(r_hi, d))
    v_lo = float(scaling_s(r_lo, d) - scaling_s(r_mid, d))
    ctx.cov_test(f"Var[phi_{r_mid}B(0) - phi_B(0)] = s({r_mid}) - s(1)", ANCHOR_NEST, inc_hi, inc_hi, v_hi,
                 seed=seed, truncation=tr, note="ln 2 in d = 2" if d == 2 else "")
    ctx.cov_test(f"Var[phi_{r_lo}B(0) - phi_{r_mid}B(0)] = s({r_lo}) - s({r_mid})", ANCHOR_NEST, inc_lo,
                 inc_lo, v_lo, seed=seed, truncation=tr)
    scale = r_mid ** (2 - d)
    est, se = jackknife(lambda x, y: np.mean(x * x) / np.mean(y * y), inc_lo, inc_hi)
    ctx.stat(f"increment variance scaling: Var(0.25B in 0.5B) / Var(0.5B in B) = {r_mid}^(2-d)", ANCHOR_NEST,
             est, se, scale, seed=seed, truncation=tr, note="jackknife standard error")
    ctx.cov_test(f"Cov of successive nested increments ({r_lo}B in {r_mid}B, {r_mid}B in B) = 0", ANCHOR_NEST,
                 inc_lo, inc_hi, 0.0, seed=seed, truncation=tr,
                 note="phi_B vanishes, so the outer increment is phi_0.5B(0)")
    ctx.pvalue("normality of the nested increment", ANCHOR_NEST, normality_pvalue(inc_lo), seed=seed,
               truncation=tr)
    ctx.det("phi_0.25B(0) - phi_0.5B(0) equals the increment functional", ANCHOR_ALG,
            float(np.max(np.abs(phi_q - phi_h - inc_lo))), 0.0,
            float(np.max(np.abs(phi_q - phi_h - inc_lo))), RECON_TOL * max(1.0, float(np.max(np.abs(inc_lo)))),
            truncation=tr, seed=seed)


def _row_level(ctx: SuiteContext) -> None:
    """Checks that hold replica by replica, hence exactly on the rows of a truncated model."""
    d = ctx.dim
    spec = ctx.spec
    tr = trunc(spec)
    model = field_model(spec)
    inner = inner_ball(d)

    # mean-value property of phi at points spread through the inner ball
    rng = np.random.default_rng(ctx.test_seed("mean-value-points"))
    worst = 0.0
    for _ in range(MEAN_VALUE_POINTS):
        u = rng.normal(size=d)
        z = inner.c + inner.radius * rng.uniform(0.0, 0.8) * u / np.linalg.norm(u)
        rho = MEAN_VALUE_FRACTION * (inner.radius - np.linalg.norm(z - inner.c))
        nodes, w = mean_value_nodes(z, rho, d, MEAN_VALUE_ORDER)
        R = harmonic_part_rows(model, inner, np.vstack([z[None], nodes]))
        resid = R[0] - w @ R[1:]
        worst = max(worst, float(np.linalg.norm(resid) / np.linalg.norm(R[0])))
    ctx.det(f"phi mean-value residual at {MEAN_VALUE_POINTS} points", ANCHOR_HARM, worst, 0.0, worst,
            ctx.tol("harmonicity", HARMONIC_TOL), truncation=tr,
            note=f"spheres of radius {MEAN_VALUE_FRACTION} x distance to the inner boundary; "
                 "relative row norm (replica RMS)")

    # reconstruction on a single replica
    h = sample_field(spec, ctx.test_seed("reconstruction"), 0)
    f = RadialMollifier(unit_vec(d, 0.4, 0.1), 0.12)
    lhs = pair(h, f)
    rhs = bulk_pairing(h, inner, f) + integrated_harmonic_part(h, inner, f)
    ctx.det("(h, f) = (h_sub, f) + int phi f", ANCHOR_ALG, lhs, rhs, abs(lhs - rhs) / max(abs(lhs), 1.0),
            ctx.tol("reconstruction", RECON_TOL), truncation=tr, seed=ctx.test_seed("reconstruction"))

    # phi does not depend on the boundary quadrature
    zs = np.array([unit_vec(d, *z) for z in OFF_POINTS])
    base = max(poisson_measure(inner, z, spec).order(model.basis.alpha_max) for z in zs)
    A = harmonic_part_rows(model, inner, zs, order=base)
    B = harmonic_part_rows(model, inner, zs, order=base + 24)
    dev = float(np.max(np.linalg.norm(A - B, axis=1) / np.linalg.norm(B, axis=1)))
    ctx.det("phi independent of the boundary quadrature order", ANCHOR_ALG, dev, 0.0, dev,
            ctx.tol("uniqueness", UNIQUE_TOL), truncation=tr, note=f"orders {base} and {base + 24}")
