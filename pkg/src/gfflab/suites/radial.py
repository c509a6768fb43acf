"""Radius-indexed processes: spherical averages h_r(0) and the A_r processes.

Only degrees n <= 2 enter, so a (2, 1000) basis is used: sphere functionals
converge like 1/K_max and the generated prefix stays short.
"""
from __future__ import annotations

import math

import numpy as np

from ..geometry import scaling_s
from ..harmonics import BasisSpec
from ..pairing import sphere_pair_covariance
from ..sampler import a_process_rows, field_model, spherical_average_rows
from ..stats import mean_estimate, normality_pvalue
from .common import SuiteContext, rel, trunc

NAME = "radial"
ANCHOR_AVG = "spherical averages h_r(0) form a Gaussian process with independent increments"
ANCHOR_VAR = "spherical-average variance -log(1 - delta) (d = 2), (1 - delta)^(2-d) - 1 (d > 2)"
ANCHOR_A = "A_r processes have independent Gaussian increments"
ANCHOR_4 = "fourth-moment bound E X_delta^4 <= C delta^(2 - eta)"
ANCHOR_NU = "nu_r^psi pairings of different degrees are uncorrelated"

RADIAL_SPEC_K = 1000
INTERVAL_PAIRS = (((0.2, 0.3), (0.5, 0.6)), ((0.1, 0.2), (0.3, 0.4)), ((0.4, 0.5), (0.7, 0.8)),
                  ((0.6, 0.7), (0.8, 0.9)))
A_COEFFS = ((1.0, 1, 1), (0.5, 2, 1))
A_RADII = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
A_PAIRS = ((0.3, 0.5), (0.5, 0.7), (0.7, 0.9), (0.4, 0.8))
DELTAS = (0.02, 0.04, 0.08)
ETA = 0.5
SLOPE_WINDOW = (1.8, 2.2)


def average_covariance(r: float, u: float, d: int) -> float:
    return float(scaling_s(max(r, u), d) - scaling_s(1.0, d))


def a_covariance(coeffs, r: float, u: float, d: int) -> float:
    """Cov(A_r, A_u) from the sphere-pairing oracle (terms of different (n, j) are orthogonal)."""
    return sum(a * a * (r * u) ** (-n) * sphere_pair_covariance(n, r, u, d) for a, n, _ in coeffs)


def log_slope(deltas, moments) -> float:
    return float(np.polyfit(np.log(deltas), np.log(moments), 1)[0])


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    _exact_source(ctx)
    spec = BasisSpec(d, 2, RADIAL_SPEC_K)
    tr = trunc(spec)
    model = field_model(spec)

    avg_radii = sorted({r for pair in INTERVAL_PAIRS for iv in pair for r in iv} | {0.5})
    rows = [spherical_average_rows(model, avg_radii), a_process_rows(model, A_COEFFS, A_RADII),
            model.nu_row(1, 1, 0.5)[None]]
    vals, seed = ctx.ensemble(model, np.concatenate(rows), "spectral-paths")
    h = dict(zip(avg_radii, vals[:, : len(avg_radii)].T))
    A = dict(zip(A_RADII, vals[:, len(avg_radii) : len(avg_radii) + len(A_RADII)].T))
    nu = vals[:, -1]

    ref = average_covariance(0.5, 0.5, d)
    ctx.cov_test("spectral Var h_0.5(0)", ANCHOR_VAR, h[0.5], h[0.5], ref, seed=seed, truncation=tr)
    for i1, i2 in INTERVAL_PAIRS:
        x1 = h[i1[0]] - h[i1[1]]
        x2 = h[i2[0]] - h[i2[1]]
        ctx.cov_test(f"Cov of h_r(0) increments over {list(i1)} and {list(i2)}", ANCHOR_AVG, x1, x2, 0.0,
                     seed=seed, truncation=tr)
        ctx.pvalue(f"normality of h_r(0) increment over {list(i1)}", ANCHOR_AVG, normality_pvalue(x1),
                   seed=seed, truncation=tr)

    label = " + ".join(f"{a} psi_({n},{j})" for a, n, j in A_COEFFS)
    for r, u in A_PAIRS:
        inc = A[r] - A[u]
        ctx.cov_test(f"Cov(A_{r} - A_{u}, A_{u})", ANCHOR_A, inc, A[u], 0.0, seed=seed, truncation=tr,
                     note=f"A built from {label}")
        ctx.pvalue(f"normality of A_{r} - A_{u}", ANCHOR_A, normality_pvalue(inc), seed=seed, truncation=tr)
    for r in (0.3, 0.7):
        ctx.cov_test(f"Var A_{r} vs sphere-pairing oracle", ANCHOR_A, A[r], A[r],
                     a_covariance(A_COEFFS, r, r, d), seed=seed, truncation=tr)

    ctx.cov_test("Cov((h, nu_0.5^psi_(1,1)), h_0.5(0)) = 0", ANCHOR_NU, nu, h[0.5], 0.0, seed=seed,
                 truncation=tr)
    ctx.cov_test("Var (h, nu_0.5^psi_(1,1)) vs double-sphere oracle", ANCHOR_NU, nu, nu,
                 sphere_pair_covariance(1, 0.5, 0.5, d), seed=seed, truncation=tr)
    est, se = mean_estimate(h[0.5] ** 4)
    ctx.stat("E h_0.5(0)^4 = 3 Var^2 (spherical integral of k4)", ANCHOR_4, est, se, 3.0 * ref**2,
             seed=seed, truncation=tr)


def _exact_source(ctx: SuiteContext) -> None:
    d = ctx.dim
    oracle = sphere_pair_covariance(0, 0.5, 0.5, d)
    formula = average_covariance(0.5, 0.5, d)
    note = ""
    if d > 2:
        note = (f"1 - (1 - delta)^(2-d) = {1.0 - 0.5 ** (2 - d):.6g} is negative; the oracle gives "
                f"(1 - delta)^(2-d) - 1")
    ctx.det("Var h_0.5(0): double-sphere oracle vs s(r) - s(1)", ANCHOR_VAR, oracle, formula,
            rel(oracle, formula), ctx.tol("oracle_rel", 1e-6), note=note)
    reference = -math.log(0.5) if d == 2 else oracle

    radii = (0.3, 0.5, 0.6) + tuple(1.0 - t for t in reversed(DELTAS))
    x, seed = ctx.ensemble_exact(radii)
    col = dict(zip(radii, x.T))
    ctx.cov_test("exact-source Var h_0.5(0)", ANCHOR_VAR, col[0.5], col[0.5], reference, seed=seed,
                 truncation=(0, 0), note=note)
    ctx.cov_test("exact-source Cov(h_0.3(0), h_0.6(0)) = s(0.6) - s(1)", ANCHOR_AVG, col[0.3], col[0.6],
                 sphere_pair_covariance(0, 0.3, 0.6, d), seed=seed, truncation=(0, 0))

    moments = []
    for delta in DELTAS:
        v = average_covariance(1.0 - delta, 1.0 - delta, d)
        est, se = mean_estimate(col[1.0 - delta] ** 4)
        moments.append(est)
        ctx.stat(f"E X_{delta}^4 = 3 Var^2", ANCHOR_4, est, se, 3.0 * v * v, seed=seed, truncation=(0, 0),
                 note=f"X_delta = h_(1-delta)(0); Var = {v:.6g}")
    slope = log_slope(DELTAS, moments)
    lo, hi = SLOPE_WINDOW
    ctx.det("log-log slope of E X_delta^4 in [1.8, 2.2]", ANCHOR_4, slope, 2.0,
            max(0.0, lo - slope, slope - hi), 0.0, seed=seed, kind="fit",
            note=f"deltas {list(DELTAS)}; moments {[float(f'{m:.6g}') for m in moments]}")
    ctx.det(f"log-log slope >= 2 - eta, eta = {ETA}", ANCHOR_4, slope, 2.0 - ETA,
            max(0.0, 2.0 - ETA - slope), 0.0, seed=seed, kind="fit")
