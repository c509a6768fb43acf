"""Constancy of r^{-n} nu_r^psi(phi) in r for harmonic phi (deterministic).

Three harmonic families are used:

* solid harmonics r^n' psi_{n',j'} with n' <= 4 (exact: value 1 on the matching
  (n, j), 0 elsewhere);
* Poisson extensions of random band-limited boundary data, computed by a
  high-order quadrature of the Poisson integral (exact: the data coefficient);
* Poisson kernels of the ball of radius RHO at random points of its boundary,
  which are harmonic in the unit ball but not polynomial (exact:
  RHO^{-n} psi_{n,j}(p / RHO)).
"""
from __future__ import annotations

import numpy as np

from ..geometry import Ball, poisson_kernel
from ..harmonics import check_constancy, default_nu_order, eval_psi, multiplicity, nu_pair, psi_all, solid_harmonic
from ..quadrature import SphereRule
from ..stats import replica_rng
from .common import SuiteContext

NAME = "constancy"
ANCHOR = "r^(-n) nu_r^psi(phi) is constant in r for harmonic phi"

N_MAX = 4
RADII = tuple(round(0.1 * k, 2) for k in range(1, 10))
VALUE_RADIUS = 0.5
POLY_ORDER = 2 * N_MAX + 8
DATA_DEGREE = 6
DATA_ORDER = N_MAX + DATA_DEGREE + 14
POISSON_ORDER = 260  # 0.9^260 ~ 1e-12: Poisson integral resolved at the largest radius
RHO = 1.5
N_POLES = 3
TOL = 1e-8
EXACT_TOL = 1e-10
LINEAR_TOL = 1e-12


class NodeCache:
    """Memoizes phi on repeated node arrays (the nu rule at a radius is reused for every (n, j))."""

    def __init__(self, phi):
        self.phi = phi
        self.store = {}

    def __call__(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        key = (x.shape, x.tobytes())
        if key not in self.store:
            self.store[key] = np.asarray(self.phi(x), dtype=float)
        return self.store[key]


def degrees(d: int):
    return [(n, j) for n in range(N_MAX + 1) for j in range(1, multiplicity(n, d) + 1)]


def poisson_extension(coeffs: dict, d: int, order: int = POISSON_ORDER):
    """x -> int P(x, theta) g(theta) d rho(theta) for g = sum c_{n,j} psi_{n,j}, by quadrature."""
    rule = SphereRule.build(d, order)
    ball = Ball.unit(d)
    n_top = max(n for n, _ in coeffs)
    psi = psi_all(n_top, rule.nodes, d)
    g = sum(c * psi[n][j - 1] for (n, j), c in coeffs.items())
    wg = rule.weights * g

    def phi(x):
        flat = np.asarray(x, dtype=float).reshape(-1, d)
        out = np.empty(len(flat))
        for lo in range(0, len(flat), 256):
            blk = flat[lo : lo + 256]
            out[lo : lo + 256] = poisson_kernel(ball, blk[:, None, :], rule.nodes[None, :, :]) @ wg
        return out.reshape(np.shape(x)[:-1])

    return phi


def exterior_poles(d: int, seed: int):
    """Random points on the sphere of radius RHO and positive weights."""
    rng = replica_rng(seed, 0)
    v = rng.normal(size=(N_POLES, d))
    p = RHO * v / np.linalg.norm(v, axis=1, keepdims=True)
    return p, rng.uniform(0.5, 1.5, size=N_POLES)


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    overall = [0.0]

    def record(dev):
        overall[0] = max(overall[0], dev)
        return dev

    _solid(ctx, record)
    _band_limited(ctx, record)
    _exterior(ctx, record)
    ctx.det(f"max deviation over all (n <= {N_MAX}, j) and the harmonic battery", ANCHOR, overall[0], 0.0,
            overall[0], ctx.tol("constancy", TOL), note=f"radii {list(RADII)}; d = {d}")


def _solid(ctx: SuiteContext, record) -> None:
    d = ctx.dim
    pairs = degrees(d)
    dev = {n: 0.0 for n in range(N_MAX + 1)}
    match_err = mismatch_err = linear_dev = 0.0
    for n2, j2 in pairs:
        phi = lambda x, n2=n2, j2=j2: solid_harmonic(n2, j2, x, d)
        for n, j in pairs:
            c = check_constancy(n, j, phi, RADII, d, POLY_ORDER)
            dev[n] = max(dev[n], c)
            if n2 == 1:
                linear_dev = max(linear_dev, c)
            v = VALUE_RADIUS ** (-n) * nu_pair(n, j, VALUE_RADIUS, phi, d, POLY_ORDER)
            if (n, j) == (n2, j2):
                match_err = max(match_err, abs(v - 1.0))
            else:
                mismatch_err = max(mismatch_err, abs(v))
    for n in range(N_MAX + 1):
        ctx.det(f"solid harmonics n' <= {N_MAX}: constancy for degree-{n} psi", ANCHOR, dev[n], 0.0,
                record(dev[n]), ctx.tol("constancy", TOL), note="max over j and the battery")
    ctx.det("linear phi: constancy for all (n, j)", ANCHOR, linear_dev, 0.0, linear_dev, LINEAR_TOL)
    ctx.det("matching degree: r^(-n) nu_r(r^n psi_(n,j)) = 1", ANCHOR, match_err, 0.0, match_err, EXACT_TOL)
    ctx.det("mismatched (n, j): nu_r = 0 (orthogonality)", ANCHOR, mismatch_err, 0.0, mismatch_err, EXACT_TOL)


def _band_limited(ctx: SuiteContext, record) -> None:
    d = ctx.dim
    rng = replica_rng(ctx.test_seed("boundary-data"), 0)
    coeffs = {(m, j): float(rng.normal()) / (1.0 + m)
              for m in range(DATA_DEGREE + 1) for j in range(1, multiplicity(m, d) + 1)}
    phi = NodeCache(poisson_extension(coeffs, d))
    dev = {n: 0.0 for n in range(N_MAX + 1)}
    err = 0.0
    for n, j in degrees(d):
        dev[n] = max(dev[n], check_constancy(n, j, phi, RADII, d, DATA_ORDER))
        v = VALUE_RADIUS ** (-n) * nu_pair(n, j, VALUE_RADIUS, phi, d, DATA_ORDER)
        err = max(err, abs(v - coeffs[n, j]))
    note = (f"boundary data of degree <= {DATA_DEGREE}; Poisson integral by a degree-{POISSON_ORDER} "
            f"sphere rule; nu rule of degree {DATA_ORDER}")
    for n in range(N_MAX + 1):
        ctx.det(f"Poisson extension of random data: constancy for degree-{n} psi", ANCHOR, dev[n], 0.0,
                record(dev[n]), ctx.tol("constancy", TOL), note=note)
    ctx.det("Poisson extension: r^(-n) nu_r equals the boundary coefficient", ANCHOR, err, 0.0,
            record(err), ctx.tol("constancy", TOL), note=note)


def _exterior(ctx: SuiteContext, record) -> None:
    d = ctx.dim
    poles, weights = exterior_poles(d, ctx.test_seed("exterior-poles"))
    outer = Ball(d, np.zeros(d), RHO)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return sum(w * poisson_kernel(outer, x, p) for p, w in zip(poles, weights))

    phi = NodeCache(phi)
    dev = {n: 0.0 for n in range(N_MAX + 1)}
    err = 0.0
    for n, j in degrees(d):
        order = default_nu_order(n, max(RADII) / RHO)
        dev[n] = max(dev[n], check_constancy(n, j, phi, RADII, d, order))
        v = VALUE_RADIUS ** (-n) * nu_pair(n, j, VALUE_RADIUS, phi, d, order)
        exact = sum(w * RHO ** (-n) * eval_psi(n, j, p / RHO, d) for p, w in zip(poles, weights))
        err = max(err, abs(v - exact))
    note = f"{N_POLES} Poisson kernels of the radius-{RHO} ball with random boundary poles"
    for n in range(N_MAX + 1):
        ctx.det(f"exterior-pole harmonic phi: constancy for degree-{n} psi", ANCHOR, dev[n], 0.0,
                record(dev[n]), ctx.tol("constancy", TOL), note=note)
    ctx.det("exterior-pole phi: r^(-n) nu_r equals RHO^(-n) psi_(n,j)(p / RHO)", ANCHOR, err, 0.0,
            record(err), ctx.tol("constancy", TOL), note=note)
