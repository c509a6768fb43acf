"""Zero boundary condition: spherical-average variances and annular K2 values decay to 0."""
from __future__ import annotations

import numpy as np

from ..geometry import Ball, scaling_s
from ..harmonics import BasisSpec
from ..pairing import pair_k2, sphere_pair_covariance
from ..sampler import field_model
from ..testfunctions import AnnularBump
from .common import SuiteContext, decrease_residual, rel, trunc

NAME = "zero_boundary"
ANCHOR_AVG = "spherical-average variance decreases to 0 as r -> 1"
ANCHOR_K2 = "K2(f_n, f_n) -> 0 for unit-mass f_n whose supports approach the boundary"

RADII = (0.5, 0.9, 0.99, 0.999)
MC_RADII = (0.9, 0.99)
NU_RADII = (0.5, 0.9, 0.99)
NU_SPEC_K = 3000
ANNULI = tuple(range(1, 11))
ANNULI_SPECTRAL = tuple(range(1, 7))
ANNULUS_K = 2000


def analytic_variance(r, d: int) -> float:
    """Var h_r(0) = s(r) - s(1) for the unit-ball field."""
    return float(scaling_s(r, d) - scaling_s(1.0, d))


def annulus(n: int, d: int) -> AnnularBump:
    return AnnularBump(np.zeros(d), 1.0 - 2.0**-n, 1.0 - 2.0 ** -(n + 1))


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    values = np.array([analytic_variance(r, d) for r in RADII])
    for r, v in zip(RADII, values):
        oracle = sphere_pair_covariance(0, r, r, d)
        note = ""
        if d > 2:
            note = f"1 - r^(2-d) = {1.0 - r ** (2 - d):.6g} has the opposite sign; oracle agrees with r^(2-d) - 1"
        ctx.det(f"Var h_{r}(0): s(r) - s(1) vs double-sphere oracle", ANCHOR_AVG, v, oracle,
                rel(v, oracle), ctx.tol("oracle_rel", 1e-6), note=note)
    ctx.det("analytic Var h_r(0) strictly decreasing on 0.5, 0.9, 0.99, 0.999", ANCHOR_AVG,
            float(values[-1]), float(values[0]), decrease_residual(values), 0.0,
            note="residual is the largest non-negative step along the grid")
    ctx.det("Var h_0.999(0) / Var h_0.5(0) < 0.02", ANCHOR_AVG, values[-1] / values[0], 0.0,
            values[-1] / values[0], 0.02)

    x, seed = ctx.ensemble_exact(MC_RADII)
    for k, r in enumerate(MC_RADII):
        ctx.cov_test(f"exact-source Var h_{r}(0)", ANCHOR_AVG, x[:, k], x[:, k], analytic_variance(r, d),
                     seed=seed, truncation=(0, 0), note="Cholesky sampler of (h_r(0))_r")

    # psi-weighted averages of degree 1 also vanish at the boundary
    spec = BasisSpec(d, 1, NU_SPEC_K)
    model = field_model(spec)
    nu_var = np.array([float(model.nu_row(1, 1, r) @ model.nu_row(1, 1, r)) for r in NU_RADII])
    nu_ref = np.array([sphere_pair_covariance(1, r, r, d) for r in NU_RADII])
    ctx.det("spectral Var (h, nu_r^psi_(1,1)) decreasing in r", ANCHOR_AVG, float(nu_var[-1]),
            float(nu_ref[-1]), decrease_residual(nu_var), 0.0, truncation=trunc(spec))
    ctx.det("spectral vs oracle Var (h, nu_r^psi_(1,1)), r = 0.5, 0.9, 0.99", ANCHOR_AVG,
            float(nu_var[-1]), float(nu_ref[-1]), float(np.max(np.abs(nu_var / nu_ref - 1.0))),
            ctx.tol("nu_truncation", 1e-2), truncation=trunc(spec))

    _annuli(ctx)


def _annuli(ctx: SuiteContext) -> None:
    d = ctx.dim
    ball = Ball.unit(d)
    k2 = np.array([pair_k2(annulus(n, d), annulus(n, d), ball, "quadrature") for n in ANNULI])
    window = k2[1:6]  # n = 2..6
    ctx.det("K2(f_n, f_n) strictly decreasing for n = 2..6", ANCHOR_K2, float(window[-1]),
            float(window[0]), decrease_residual(window), 0.0,
            note="f_n unit-mass radial bump on 1 - 2^-n < |x| < 1 - 2^-(n+1)")
    ctx.det("K2(f_n, f_n) strictly decreasing for n = 1..10", ANCHOR_K2, float(k2[-1]), float(k2[0]),
            decrease_residual(k2), 0.0)
    ctx.det("K2(f_10, f_10) / K2(f_1, f_1) < 1e-2", ANCHOR_K2, float(k2[-1] / k2[0]), 0.0,
            float(k2[-1] / k2[0]), 1e-2)
    spec = BasisSpec(d, 0, ANNULUS_K)
    spectral = np.array([pair_k2(annulus(n, d), annulus(n, d), ball, "spectral", spec)
                         for n in ANNULI_SPECTRAL])
    dev = float(np.max(np.abs(spectral / k2[: len(ANNULI_SPECTRAL)] - 1.0)))
    ctx.det("annular K2: spectral vs radial quadrature, n = 1..6", ANCHOR_K2, float(spectral[-1]),
            float(k2[len(ANNULI_SPECTRAL) - 1]), dev, ctx.tol("annulus_rel", 1e-6),
            truncation=trunc(spec))
    masses = np.array([annulus(n, d).mass() for n in ANNULI])
    ctx.det("f_n have unit mass", ANCHOR_K2, float(masses.min()), 1.0,
            float(np.max(np.abs(masses - 1.0))), 1e-8)
