"""The covariance form K2(f, g) = int int f(x) G(x, y) g(y) dx dy and sphere-pairing oracles."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .geometry import Ball, DomainError, green_ball, green_constant, green_regularized, singular_part
from .harmonics import BasisSpec, default_spec, get_basis
from .quadrature import SphereRule, gauss_interval, gauss_legendre, sphere_area
from .testfunctions import QuadratureError, TestFunction, is_radial_about

METHODS = ("spectral", "quadrature")


def pair_k2(f: TestFunction, g: TestFunction, ball: Ball, method: str = "spectral",
            spec: BasisSpec | None = None) -> float:
    """K2(f, g) on ``ball``.

    ``spectral`` sums kappa_d lambda^{-1} <e, f><e, g> over a truncated
    eigenbasis (kappa_d converts the inverse Laplacian to G, see ``green_constant``);
    ``quadrature`` integrates the kernel directly, splitting off the diagonal
    singularity. When one partner is radial about its own center the singular
    part is its exact Newtonian potential (shell theorem); otherwise it is
    integrated in polar coordinates about each outer node.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    for h in (f, g):
        if not ball.contains_ball(h.support):
            raise DomainError(f"support of {h!r} leaks outside {ball}")
    if method == "spectral":
        basis = get_basis(spec or default_spec(ball.dim))
        a = f.overlaps(basis, ball)
        b = g.overlaps(basis, ball)
        return float(np.sum(a * b * spectral_weights(basis, ball)))
    if _radial_about(f, ball) and _radial_about(g, ball):
        return _pair_k2_radial(f, g, ball)
    radial_f, radial_g = hasattr(f, "radial_density"), hasattr(g, "radial_density")
    if (radial_f and not radial_g) or (radial_f and f.support.radius > g.support.radius):
        f, g = g, f
    if hasattr(g, "radial_density"):
        return _pair_k2_shell(f, g, ball)
    if not getattr(g, "solid", False):
        if getattr(f, "solid", False):
            f, g = g, f
        else:
            raise QuadratureError("quadrature needs at least one function with a ball support")
    return _pair_k2_polar(f, g, ball)


def spectral_weights(basis, ball: Ball) -> np.ndarray:
    """Variance kappa_d R^2 / lambda of each mode on ``ball``."""
    return green_constant(ball.dim) * ball.radius**2 / basis.eigenvalues


def _radial_about(f, ball):
    return is_radial_about(f, ball.c)


def _cumulative(f, upper, n=64):
    # int_{a}^{min(upper, b)} F(r) dr for each entry of ``upper``
    a, b = f.radial_range
    x, w = gauss_legendre(n)
    top = np.clip(upper, a, b)
    half = 0.5 * (top - a)
    nodes = a + half[:, None] * (x[None, :] + 1.0)
    return np.sum(half[:, None] * w[None, :] * f.radial_density(nodes), axis=1)


def _pair_k2_radial(f, g, ball, n=160):
    """Radial reduction: the sphere average of G is s_b(max(r, u)) - s_b(R)."""
    s_b = lambda rho: singular_part(rho, ball)
    total = 0.0
    for p, q in ((f, g), (g, f)):
        r, w = gauss_interval(*p.radial_range, n)
        r = r[r > 0]
        w = w[-len(r):]
        total += np.sum(w * p.radial_density(r) * s_b(r) * _cumulative(q, r))
    mass = lambda h: float(_cumulative(h, np.array([h.radial_range[1]]))[0])
    return float(total - s_b(ball.radius) * mass(f) * mass(g))


def _shell_potential(g, r, ball):
    """int s_b(|x - y|) g(y) dy at |x - c_g| = r: s_b(r) M(r) + int_{rho > r} s_b(rho) F(rho) d rho."""
    a, b = g.radial_range
    x, w = gauss_legendre(64)
    lo = np.clip(r, a, b)
    half = 0.5 * (b - lo)
    rho = lo[:, None] + half[:, None] * (x[None, :] + 1.0)
    tail = np.sum(half[:, None] * w[None, :] * g.radial_density(rho) * singular_part(rho, ball), axis=1)
    inner = _cumulative(g, r)
    safe = np.where(r > 0, r, 1.0)
    return tail + np.where(inner > 0, inner * singular_part(safe, ball), 0.0)


def _pair_k2_shell(f, g, ball, chunk=256, resolve=30.0):
    """Regular part by tensor quadrature, singular part from the exact potential of radial g.

    The potential of g varies on the scale of g's support, so the outer rule is
    refined to bandwidth ``resolve / radius(g)`` for the singular part only.
    """
    xf, wf = f.quadrature()
    xg, wg = g.quadrature()
    reg = 0.0
    for s in range(0, len(xf), chunk):
        reg += wf[s : s + chunk] @ green_regularized(xf[s : s + chunk, None, :], xg[None, :, :], ball) @ wg
    xf, wf = f.quadrature(resolve / g.support.radius)
    r = np.linalg.norm(xf - g.center, axis=-1)
    return float(reg + wf @ _shell_potential(g, r, ball))


def _ray_ball(x, dirs, center, radius):
    """Entry/exit distances of rays x + t dir (t >= 0) through a ball; NaN if missed."""
    oc = x[:, None, :] - center  # (P, 1, d)
    b = np.einsum("pkd,kd->pk", np.broadcast_to(oc, (len(x), len(dirs), x.shape[1])), dirs)
    c = np.sum(oc * oc, axis=-1) - radius**2  # (P, 1)
    disc = b * b - c
    root = np.sqrt(np.where(disc > 0, disc, np.nan))
    t0 = np.maximum(-b - root, 0.0)
    t1 = -b + root
    t1 = np.where(t1 > 0, t1, np.nan)
    return t0, t1


def _pair_k2_polar(f, g, ball, n_chord=32, chunk=256):
    d = ball.dim
    xf, wf = f.quadrature()
    xg, wg = g.quadrature()
    # regular part: smooth tensor-product sum
    reg = 0.0
    for s in range(0, len(xf), chunk):
        Rk = green_regularized(xf[s : s + chunk, None, :], xg[None, :, :], ball)
        reg += wf[s : s + chunk] @ Rk @ wg
    # singular part: far nodes by tensor product, near nodes in polar coordinates
    gc, ge = g.support.c, g.support.radius
    gap = np.linalg.norm(xf - gc, axis=-1) - ge
    far = gap > 0.25 * ge
    sing = 0.0
    for idx in np.array_split(np.nonzero(far)[0], max(1, int(far.sum()) // chunk)):
        if len(idx):
            dist = np.linalg.norm(xf[idx, None, :] - xg[None, :, :], axis=-1)
            sing += wf[idx] @ singular_part(dist, ball) @ wg
    near = np.nonzero(~far)[0]
    if len(near):
        rule = SphereRule.build(d, 96 if d == 2 else 20)
        u, wu = gauss_legendre(n_chord)
        u = 0.5 * (u + 1.0)
        wu = 0.5 * wu
        area = sphere_area(d)
        for s in range(0, len(near), chunk // 4 or 1):
            idx = near[s : s + chunk // 4 or 1]
            x = xf[idx]
            t0, t1 = _ray_ball(x, rule.nodes, gc, ge)
            hit = ~np.isnan(t1)
            t0 = np.where(hit, t0, 0.0)
            t1 = np.where(hit, t1, 0.0)
            start_at_x = t0 <= 0.0
            # graded map t = t1 u^2 when the chord starts at the singularity
            L = t1 - t0
            tt = np.where(start_at_x[..., None], t1[..., None] * u**2, t0[..., None] + L[..., None] * u)
            jac = np.where(start_at_x[..., None], 2.0 * t1[..., None] * u, L[..., None])
            pts = x[:, None, None, :] + tt[..., None] * rule.nodes[None, :, None, :]
            safe_t = np.where(tt > 0, tt, 1.0)
            integrand = g(pts) * singular_part(safe_t, ball) * safe_t ** (d - 1) * jac
            integrand = np.where(tt > 0, integrand, 0.0)
            inner = area * np.einsum("pkq,q,k->p", integrand, wu, rule.weights)
            sing += wf[idx] @ inner
    return float(reg + sing)


def tensor_pair_k2(f: TestFunction, g: TestFunction, ball: Ball, chunk=512) -> float:
    """Plain tensor-product quadrature of G; valid only for well-separated supports."""
    gap = np.linalg.norm(f.support.c - g.support.c) - f.support.radius - g.support.radius
    if gap <= 0:
        raise QuadratureError("tensor quadrature needs disjoint supports")
    xf, wf = f.quadrature()
    xg, wg = g.quadrature()
    tot = 0.0
    for s in range(0, len(xf), chunk):
        tot += wf[s : s + chunk] @ green_ball(xf[s : s + chunk, None, :], xg[None, :, :], ball) @ wg
    return float(tot)


def sphere_pair_covariance(n: int, r1: float, r2: float, d: int) -> float:
    """Cov((h, nu_{r1}^{psi_{n,j}}), (h, nu_{r2}^{psi_{n,j}})) by 1-D quadrature of G.

    The Green's function of the unit ball is rotation invariant, so the double
    sphere integral collapses to one angle between the two points (Funk-Hecke).
    """
    if not (0 < r1 < 1 and 0 < r2 < 1):
        raise DomainError("radii must lie in (0, 1)")
    ball = Ball.unit(d)
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
    if d == 2:
        x = np.array([r1, 0.0])

        def fn(phi):
            y = r2 * np.array([math.cos(phi), math.sin(phi)])
            return float(green_ball(x, y, ball)) * math.cos(n * phi)

        val, _ = integrate.quad(fn, 0.0, math.pi, **opts)
        return val / math.pi
    if d == 3:
        # t = 1 - u^2 removes the |x - y|^{-1} singularity at t = 1 when r1 = r2;
        # both distances are written in u directly to avoid cancellation
        p = 2.0 * r1 * r2

        def fn(u):
            near = math.sqrt((r1 - r2) ** 2 + p * u * u)
            image = math.sqrt((1.0 - r1 * r2) ** 2 + p * u * u)
            t = 1.0 - u * u
            lead = 2.0 * u / near if near > 0 else math.sqrt(2.0) / r1
            return (lead - 2.0 * u / image) * special.eval_legendre(n, t)

        # the image term varies on the scale 1 - r1 r2 near u = 0
        c = 1.0 - r1 * r2
        pts = [q for q in (0.5 * c, c, 3.0 * c, 10.0 * c) if q < math.sqrt(2.0)]
        val, _ = integrate.quad(fn, 0.0, math.sqrt(2.0), points=pts, **opts)
        return 0.5 * val
    raise DomainError(f"unsupported dimension {d}")
