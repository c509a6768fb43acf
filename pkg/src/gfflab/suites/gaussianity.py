"""Gaussianity: moment ratios, goodness of fit, the Wick four-point identity and joint normality."""
from __future__ import annotations

import numpy as np

from ..geometry import Ball, wick_g4
from ..pairing import pair_k2
from ..sampler import field_model
from ..stats import jackknife, kurtosis_ratio, mean_estimate, normality_pvalue, replica_rng
from ..testfunctions import Combination, RadialMollifier
from .common import SuiteContext, rel, suite_spec, trunc
from .covariance import SUITE_TRUNCATION

NAME = "gaussianity"
ANCHOR_GAUSS = "pairings are jointly Gaussian"
ANCHOR_WICK = "four-point function equals the Wick sum g of Green's functions"
ANCHOR_MOM = "fourth moments exist and take Gaussian values"
ANCHOR_JOINT = "nu_r^psi pairings at mixed degrees and radii are jointly Gaussian"

WICK_EPS = {2: 0.05, 3: 0.2}
N_COMBOS = 10
N_ATOMS = 6


def battery(d: int):
    """Five test functions: four mollifiers and one signed combination."""
    pad = (0.0,) * (d - 2)
    f = [
        RadialMollifier((0.0, 0.0) + pad, 0.2),
        RadialMollifier((0.3, 0.2) + pad, 0.1),
        RadialMollifier((-0.5, 0.1) + pad, 0.15),
        RadialMollifier((0.1, -0.7) + pad, 0.1),
    ]
    f.append(Combination([(1.0, f[1]), (-0.5, f[2])]))
    labels = ["eta_0^0.2", "eta_(0.3,0.2)^0.1", "eta_(-0.5,0.1)^0.15", "eta_(0.1,-0.7)^0.1",
              "eta_b - 0.5 eta_c"]
    return f, labels


def quadruple(d: int):
    pad = (0.0,) * (d - 2)
    return [np.array(p + pad) for p in ((0.4, 0.0), (-0.4, 0.0), (0.0, 0.4), (0.0, -0.4))]


def smoothed_wick(fs, ball: Ball) -> float:
    """Sum over pairings of products of K2 values; the mollified Wick sum g."""
    K = {}
    for a in range(4):
        for b in range(a + 1, 4):
            K[a, b] = pair_k2(fs[a], fs[b], ball, "quadrature")
    return K[0, 1] * K[2, 3] + K[0, 2] * K[1, 3] + K[0, 3] * K[1, 2]


def nu_atoms(d: int, spec, seed: int):
    """Random (n, j, r) atoms with n <= 3 and combination coefficients, from one stream."""
    from ..harmonics import multiplicity

    rng = replica_rng(seed, 0)
    atoms = []
    for _ in range(N_ATOMS):
        n = int(rng.integers(0, min(3, spec.n_max) + 1))
        j = int(rng.integers(1, multiplicity(n, d) + 1))
        r = float(np.round(rng.uniform(0.2, 0.9), 3))
        atoms.append((n, j, r))
    coeffs = rng.normal(size=(N_COMBOS, N_ATOMS))
    return atoms, coeffs


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    ball = Ball.unit(d)
    spec = suite_spec(ctx.config, d, SUITE_TRUNCATION)
    tr = trunc(spec)
    model = field_model(spec)

    funcs, labels = battery(d)
    pts = quadruple(d)
    eps = WICK_EPS[d]
    wick_funcs = [RadialMollifier(p, eps) for p in pts]
    atoms, coeffs = nu_atoms(d, spec, ctx.test_seed("nu-atoms"))
    nu_rows = np.stack([model.nu_row(n, j, r) for n, j, r in atoms])
    rows = np.concatenate([
        np.stack([model.functional(f) for f in funcs + wick_funcs]),
        coeffs @ nu_rows,
    ])
    vals, seed = ctx.ensemble(model, rows, "battery")

    for k, label in enumerate(labels):
        x = vals[:, k]
        est, se = jackknife(kurtosis_ratio, x)
        ctx.stat(f"E X^4 / 3 (E X^2)^2 = 1 [{label}]", ANCHOR_MOM, est, se, 1.0, seed=seed, truncation=tr)
        est, se = mean_estimate(x**3)
        ctx.stat(f"E X^3 = 0 [{label}]", ANCHOR_GAUSS, est, se, 0.0, seed=seed, truncation=tr)
        ctx.pvalue(f"Kolmogorov-Smirnov vs normal [{label}]", ANCHOR_GAUSS, normality_pvalue(x),
                   seed=seed, truncation=tr, note="scale from first half, test on second half")

    w = vals[:, len(funcs) : len(funcs) + 4]
    ref = smoothed_wick(wick_funcs, ball)
    exact = float(wick_g4(*pts, ball))
    ctx.det("mollified Wick sum equals g at the centres", ANCHOR_WICK, ref, exact, rel(ref, exact),
            ctx.tol("oracle_rel", 1e-6), note="mean-value identity for disjoint radial mollifiers")
    est, se = mean_estimate(np.prod(w, axis=1))
    ctx.stat("E prod (h, eta_zi) vs mollified g", ANCHOR_WICK, est, se, ref, seed=seed, truncation=tr,
             note=f"z = (+-0.4, 0), (0, +-0.4); eps = {eps}")

    combos = vals[:, len(funcs) + 4 :]
    atom_note = "atoms (n, j, r): " + "; ".join(f"({n},{j},{r})" for n, j, r in atoms)
    for c in range(N_COMBOS):
        ctx.pvalue(f"normality of random nu-combination {c}", ANCHOR_JOINT, normality_pvalue(combos[:, c]),
                   seed=seed, truncation=tr, note=atom_note)
