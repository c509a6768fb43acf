"""Walk-on-spheres exit distribution against the Poisson kernel of the unit ball.

The harmonic measure seen from z is what the harmonic part phi(z) of the
Markov decomposition integrates against, so the Poisson-kernel bin
probabilities used elsewhere are checked against an independent stochastic
construction. Walks run in the unit ball carved out of a larger outer ball, so
every walk must exit through the unit sphere.
"""
from __future__ import annotations

import numpy as np
from scipy import stats as sps

from ..geometry import Ball
from ..wos import poisson_bin_probabilities, wos_harmonic_measure
from .common import SuiteContext, fmt_point, unit_vec

NAME = "harmonic_measure"
ANCHOR = "harmonic measure of the ball has the Poisson kernel as density"

N_BINS = 16
OUTER_RADIUS = 2.0
START = (0.5, 0.2)


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    ball = Ball.unit(d)
    outer = Ball(d, np.zeros(d), OUTER_RADIUS)
    n = ctx.replicas
    z = unit_vec(d, *START)
    axis = z / np.linalg.norm(z)
    seed = ctx.test_seed("off-center")
    rec = wos_harmonic_measure(z, outer, ball, n, seed)
    ctx.det("every walk exits through the unit sphere", ANCHOR, rec.carved_hits, n, n - rec.carved_hits, 0.0,
            seed=seed, note=f"outer ball radius {OUTER_RADIUS}")
    radial = float(np.max(np.abs(np.linalg.norm(rec.exits, axis=1) - 1.0)))
    ctx.det("exit points lie on the unit sphere", ANCHOR, radial, 0.0, radial, 1e-12, seed=seed)

    counts = rec.binned(N_BINS, axis=axis)
    probs = poisson_bin_probabilities(ball, z, N_BINS, axis=axis)
    coord = "angle" if d == 2 else "cos of the angle to z"
    for b in range(N_BINS):
        p = probs[b]
        ctx.stat(f"bin {b + 1}/{N_BINS} exit frequency from z = {fmt_point(z)}", ANCHOR, counts[b] / n,
                 float(np.sqrt(p * (1.0 - p) / n)), p, seed=seed, truncation=(0, 0), replicas=n,
                 note=f"equal-width bins in the {coord}; reference is the integrated Poisson kernel")
    ctx.det("Poisson bin probabilities sum to 1", ANCHOR, float(probs.sum()), 1.0, abs(float(probs.sum()) - 1.0),
            1e-10)

    seed0 = ctx.test_seed("centre")
    rec0 = wos_harmonic_measure(np.zeros(d), outer, ball, n, seed0)
    counts0 = rec0.binned(N_BINS, axis=np.eye(d)[0])
    probs0 = poisson_bin_probabilities(ball, np.zeros(d), N_BINS, axis=np.eye(d)[0])
    p_value = float(sps.chisquare(counts0, n * probs0).pvalue)
    ctx.pvalue("chi-square uniformity of exits from the centre", ANCHOR, p_value, seed=seed0, truncation=(0, 0),
               replicas=n, note=f"{N_BINS} equal-probability bins")
