"""Test functions and measures that the field can be paired with.

Every object exposes ``quadrature(bandwidth)`` returning nodes and weights with
the density already folded into the weights, so that ``sum w g(x)`` approximates
``int g f``.  ``bandwidth`` is the largest wavenumber the integrand partner may
contain (in physical units); rules are refined accordingly.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .geometry import Ball, DomainError, poisson_kernel
from .harmonics import Basis, multiplicity, psi_all, radial_function
from .quadrature import SphereRule, gauss_interval, sphere_area


class QuadratureError(ValueError):
    """Mode overlaps of a test function cannot be computed reliably."""


def bump(t):
    """exp(-1/(1-t^2)) on |t| < 1, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1.0
    out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
    return out


@lru_cache(maxsize=8)
def _bump_moment(d: int) -> float:
    val, _ = integrate.quad(lambda t: math.exp(-1.0 / (1.0 - t * t)) * t ** (d - 1), 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-14, limit=200)
    return val


def _chord_nodes(bandwidth: float, length: float, base: int) -> int:
    return base + int(math.ceil(0.6 * bandwidth * length))


def _sphere_order(bandwidth: float, radius: float, base: int) -> int:
    return base + int(math.ceil(bandwidth * radius))


def is_radial_about(f, center) -> bool:
    """True if f is a radial profile about ``center`` (exposes ``radial_density``)."""
    return hasattr(f, "radial_density") and np.allclose(f.center, center, atol=1e-14)


def _radial_overlaps(f, basis: Basis, ball: Ball):
    """Overlaps of a radial profile about c by the Helmholtz mean-value theorem.

    The mean of e_k over the sphere of radius rho about c is e_k(c) Omega_d(alpha_k rho)
    with Omega_2 = J_0 and Omega_3 = j_0, so <e_k, f> = e_k(c) int Omega_d(alpha_k rho) F(rho) d rho
    with F the radial mass density of f.
    """
    d, R = ball.dim, ball.radius
    a, b = f.radial_range
    rho, w = gauss_interval(a, b, _chord_nodes(basis.alpha_max / R, b - a, f.base_nodes))
    wd = w * f.radial_density(rho)
    means = [radial_function(0, np.outer(alpha, rho / R), d) @ wd for alpha in basis.alphas]
    n_per_mode = basis.table["n"]
    mean = np.concatenate([np.tile(means[n], multiplicity(n, d)) for n in range(len(means))])
    assert len(mean) == len(n_per_mode)
    e_c = basis.evaluate(ball.to_unit(f.center)[None])[:, 0]
    return R ** (-d / 2.0) * e_c * mean


class TestFunction:
    dim: int
    support: Ball

    def __call__(self, x):
        raise NotImplementedError

    def quadrature(self, bandwidth: float = 0.0):
        raise NotImplementedError

    def overlaps(self, basis: Basis, ball: Ball):
        """<e_k^{ball}, f> for every mode of ``basis`` transported to ``ball``."""
        if self.support.dim != ball.dim:
            raise DomainError("dimension mismatch")
        if ball.disjoint_from(self.support):
            return np.zeros(basis.size)
        if not ball.contains_ball(self.support):
            raise QuadratureError("test function support straddles the ball boundary")
        if hasattr(self, "radial_density"):
            return _radial_overlaps(self, basis, ball)
        nodes, w = self.quadrature(basis.alpha_max / ball.radius)
        return ball.radius ** (-ball.dim / 2.0) * basis.overlaps(ball.to_unit(nodes), w)

    def __mul__(self, a):
        return Combination([(float(a), self)])

    __rmul__ = __mul__

    def __add__(self, other):
        return Combination([(1.0, self), (1.0, other)])

    def __neg__(self):
        return Combination([(-1.0, self)])

    def __sub__(self, other):
        return self + (-other)

    def mass(self) -> float:
        _, w = self.quadrature()
        return float(np.sum(w))


class RadialMollifier(TestFunction):
    """Unit-mass bump C exp(-1/(1-|x-z|^2/eps^2)) supported in the eps-ball about z."""

    def __init__(self, center, eps: float, base_nodes: int = 40):
        self.center = np.asarray(center, dtype=float)
        self.dim = len(self.center)
        if not eps > 0:
            raise DomainError("eps must be positive")
        self.eps = float(eps)
        self.support = Ball(self.dim, self.center, self.eps)
        self.const = 1.0 / (self.eps**self.dim * sphere_area(self.dim) * _bump_moment(self.dim))
        self.base_nodes = base_nodes

    def __repr__(self):
        return f"RadialMollifier(center={tuple(self.center)}, eps={self.eps})"

    solid = True

    def profile(self, rho):
        return self.const * bump(np.asarray(rho) / self.eps)

    def radial_density(self, rho):
        return self.profile(rho) * sphere_area(self.dim) * np.asarray(rho) ** (self.dim - 1)

    @property
    def radial_range(self):
        return 0.0, self.eps

    def __call__(self, x):
        rho = np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)
        return self.profile(rho)

    def quadrature(self, bandwidth: float = 0.0):
        d = self.dim
        nr = _chord_nodes(bandwidth, self.eps, self.base_nodes)
        order = _sphere_order(bandwidth, self.eps, 24 if d == 2 else 12)
        rho, wr = gauss_interval(0.0, self.eps, nr)
        wr = wr * rho ** (d - 1) * sphere_area(d) * self.profile(rho)
        rule = SphereRule.build(d, order)
        nodes = self.center + (rho[:, None, None] * rule.nodes[None]).reshape(-1, d)
        return nodes, np.outer(wr, rule.weights).ravel()


class AnnularBump(TestFunction):
    """Unit-mass radial bump about ``center`` supported in r_in < |x - center| < r_out."""

    def __init__(self, center, r_in: float, r_out: float, base_nodes: int = 48):
        self.center = np.asarray(center, dtype=float)
        self.dim = len(self.center)
        if not 0 <= r_in < r_out:
            raise DomainError("need 0 <= r_in < r_out")
        self.r_in, self.r_out = float(r_in), float(r_out)
        self.support = Ball(self.dim, self.center, self.r_out)
        self.base_nodes = base_nodes
        rho, w = gauss_interval(self.r_in, self.r_out, 4 * base_nodes)
        raw = np.sum(w * self._raw(rho) * rho ** (self.dim - 1)) * sphere_area(self.dim)
        self.const = 1.0 / raw

    def __repr__(self):
        return f"AnnularBump(center={tuple(self.center)}, r_in={self.r_in}, r_out={self.r_out})"

    solid = False

    @property
    def radial_range(self):
        return self.r_in, self.r_out

    def _raw(self, rho):
        mid = 0.5 * (self.r_in + self.r_out)
        half = 0.5 * (self.r_out - self.r_in)
        return bump((np.asarray(rho) - mid) / half)

    def profile(self, rho):
        return self.const * self._raw(rho)

    def radial_density(self, rho):
        """Mass per unit radius: profile * |S^{d-1}| rho^{d-1}."""
        return self.profile(rho) * sphere_area(self.dim) * np.asarray(rho) ** (self.dim - 1)

    def __call__(self, x):
        rho = np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)
        return self.profile(rho)

    def quadrature(self, bandwidth: float = 0.0):
        d = self.dim
        nr = _chord_nodes(bandwidth, self.r_out - self.r_in, self.base_nodes)
        order = _sphere_order(bandwidth, self.r_out, 24 if d == 2 else 16)
        rho, wr = gauss_interval(self.r_in, self.r_out, nr)
        wr = wr * self.radial_density(rho)
        rule = SphereRule.build(d, order)
        nodes = self.center + (rho[:, None, None] * rule.nodes[None]).reshape(-1, d)
        return nodes, np.outer(wr, rule.weights).ravel()


class SphereMeasure(TestFunction):
    """Measure on the sphere ``sphere``: uniform probability, or harmonic measure seen from ``z``.

    ``weight`` (a function of the unit direction) and the constant ``scale`` multiply it.
    """

    def __init__(self, sphere: Ball, z=None, weight=None, min_order: int = 0, scale: float = 1.0):
        self.sphere = sphere
        self.dim = sphere.dim
        self.support = sphere
        self.z = None if z is None else np.asarray(z, dtype=float)
        if self.z is not None:
            gap = sphere.radius - np.linalg.norm(self.z - sphere.c)
            if gap <= 0:
                raise DomainError("observation point must lie inside the sphere")
        self.weight = weight
        self.min_order = min_order
        self.scale = float(scale)

    def __repr__(self):
        return f"SphereMeasure(sphere={self.sphere}, z={None if self.z is None else tuple(self.z)})"

    def __call__(self, x):
        raise TypeError("a surface measure has no pointwise density in the volume")

    def poisson_order(self, tol: float = 1e-15) -> int:
        if self.z is None:
            return 0
        q = np.linalg.norm(self.z - self.sphere.c) / self.sphere.radius
        if q < 1e-12:
            return 0
        return int(math.ceil(math.log(tol) / math.log(q)))

    def order(self, bandwidth: float = 0.0) -> int:
        band = bandwidth * self.sphere.radius
        band += 3.0 * max(band, 1.0) ** (1.0 / 3.0) + 16
        return max(self.min_order, int(math.ceil(band)) + self.poisson_order())

    def quadrature(self, bandwidth: float = 0.0, order: int | None = None):
        rule = SphereRule.build(self.dim, self.order(bandwidth) if order is None else order)
        nodes = self.sphere.c + self.sphere.radius * rule.nodes
        w = rule.weights.copy()
        if self.z is not None:
            w = w * poisson_kernel(self.sphere, self.z, nodes)
        if self.weight is not None:
            w = w * self.weight(rule.nodes)
        return nodes, self.scale * w

    def overlaps(self, basis: Basis, ball: Ball):
        concentric = np.allclose(self.sphere.c, ball.c, atol=1e-14)
        if concentric and self.weight is None and ball.contains_ball(self.sphere):
            return self._concentric_overlaps(basis, ball)
        return super().overlaps(basis, ball)

    def _concentric_overlaps(self, basis: Basis, ball: Ball):
        # Poisson extension of e_k restricted to the sphere, evaluated at z
        d, R = self.dim, ball.radius
        rs = self.sphere.radius / R
        out = np.zeros(basis.size)
        if self.z is None:
            zr, th = 0.0, np.eye(d)[:1]
        else:
            dz = (self.z - ball.c) / R
            zr = float(np.linalg.norm(dz))
            th = (dz / zr)[None] if zr > 0 else np.eye(d)[:1]
        n_top = 0 if zr == 0.0 else basis.spec.n_max
        psis = psi_all(n_top, th, d)
        for n in range(n_top + 1):
            rad = basis.radial_block(n, np.array([rs]))[:, 0] * (zr / rs) ** n
            blk = np.outer(psis[n][:, 0], rad)
            o = basis.offsets[n]
            out[o : o + blk.size] = blk.ravel()
        return self.scale * R ** (-d / 2.0) * out


class EigenProbe(TestFunction):
    """The eigenfunction e_{n,j,i} of the unit ball used as a test function."""

    def __init__(self, dim, n, j, i):
        from .harmonics import eigenfunction

        self.ef = eigenfunction(n, j, i, dim)
        self.dim = dim
        self.support = Ball.unit(dim)

    def __call__(self, x):
        return self.ef(x)

    def quadrature(self, bandwidth: float = 0.0):
        from .quadrature import ball_rule

        bw = max(bandwidth, self.ef.alpha)
        nodes, w = ball_rule(self.support, 32 + int(bw), int(2 * bw) + 16)
        return nodes, w * self.ef(nodes)

    def overlaps(self, basis: Basis, ball: Ball):
        if not ball.is_unit():
            return super().overlaps(basis, ball)
        out = np.zeros(basis.size)
        ef = self.ef
        out[basis.index(ef.n, ef.j, ef.i)] = 1.0
        return out


class Combination(TestFunction):
    """Finite linear combination sum a_k f_k."""

    def __init__(self, terms):
        flat = []
        for a, f in terms:
            if isinstance(f, Combination):
                flat.extend((a * b, g) for b, g in f.terms)
            else:
                flat.append((a, f))
        self.terms = flat
        self.dim = flat[0][1].dim
        centers = np.array([t.support.c for _, t in flat])
        c = centers.mean(axis=0)
        r = max(np.linalg.norm(t.support.c - c) + t.support.radius for _, t in flat)
        self.support = Ball(self.dim, c, r)

    def __call__(self, x):
        return sum(a * f(x) for a, f in self.terms)

    def quadrature(self, bandwidth: float = 0.0):
        parts = [f.quadrature(bandwidth) for _, f in self.terms]
        nodes = np.concatenate([p[0] for p in parts])
        w = np.concatenate([a * p[1] for (a, _), p in zip(self.terms, parts)])
        return nodes, w

    def overlaps(self, basis: Basis, ball: Ball):
        return sum(a * f.overlaps(basis, ball) for a, f in self.terms)

    def restricted_to(self, ball: Ball) -> "Combination | None":
        """Terms supported inside ``ball``; terms straddling its boundary are rejected."""
        keep = []
        for a, f in self.terms:
            if ball.contains_ball(f.support):
                keep.append((a, f))
            elif not ball.disjoint_from(f.support):
                raise DomainError(f"{f!r} straddles the boundary of {ball}")
        return Combination(keep) if keep else None


