"""Domain Markov decomposition h = h_sub + phi on sub-balls, computed from field samples.

The harmonic part phi on ``inner`` is the Poisson extension of the field's
boundary values: phi(z) = (h, mu_z) with mu_z the harmonic measure of
``inner`` seen from z. Pairings of h_sub with f are then (h, f - mu_f), where
mu_f = int mu_z f(z) dz is the balayage of f onto the sphere.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .geometry import Ball, DomainError, poisson_kernel
from .quadrature import SphereRule, sphere_points
from .sampler import FieldModel, FieldSample, pair
from .testfunctions import Combination, SphereMeasure, TestFunction, is_radial_about

MIN_BOUNDARY_GAP = 1e-3


def _check_inside_unit(ball: Ball):
    if not Ball.unit(ball.dim).contains_ball(ball):
        raise DomainError(f"{ball} is not contained in the unit ball")


def _min_order(spec=None) -> int:
    return 0 if spec is None else 2 * spec.n_max + 8


def poisson_measure(inner: Ball, z, spec=None) -> SphereMeasure:
    """Harmonic measure of ``inner`` from z; rejects z within 1e-3 R of the sphere."""
    z = np.asarray(z, dtype=float)
    gap = inner.radius - np.linalg.norm(z - inner.c)
    if gap < MIN_BOUNDARY_GAP * inner.radius:
        raise DomainError("z is too close to (or outside) the sphere for reliable quadrature")
    return SphereMeasure(inner, z=z, min_order=_min_order(spec))


def harmonic_part(h: FieldSample, inner: Ball, z) -> float:
    _check_inside_unit(inner)
    return pair(h, poisson_measure(inner, z, h.spec))


def balayage(inner: Ball, f: TestFunction, spec=None) -> SphereMeasure:
    """The measure int mu_z f(z) dz on the sphere of ``inner``, f supported in ``inner``."""
    if not inner.contains_ball(f.support):
        raise DomainError(f"support of {f!r} leaks outside {inner}")
    if is_radial_about(f, inner.c):
        # rotation averaging turns every Poisson kernel into the uniform measure
        mass = f.mass()
        return SphereMeasure(inner, scale=mass, min_order=_min_order(spec))
    xf, wf = f.quadrature()

    def density(theta):
        pts = inner.c + inner.radius * theta
        return wf @ poisson_kernel(inner, xf[:, None, :], pts[None, :, :])

    return SphereMeasure(inner, weight=density, min_order=_min_order(spec))


def bulk_functional(inner: Ball, f: TestFunction, spec=None) -> TestFunction:
    """f - mu_f, so that (h, f - mu_f) is the pairing of h_sub with f."""
    _check_inside_unit(inner)
    return Combination([(1.0, f), (-1.0, balayage(inner, f, spec))])


def bulk_pairing(h: FieldSample, inner: Ball, f: TestFunction) -> float:
    return pair(h, bulk_functional(inner, f, h.spec))


def integrated_harmonic_part(h: FieldSample, inner: Ball, f: TestFunction) -> float:
    """int phi(z) f(z) dz, evaluated through the balayage of f."""
    return pair(h, balayage(inner, f, h.spec))


def harmonic_part_volume(h: FieldSample, inner: Ball, f: TestFunction) -> float:
    """int phi(z) f(z) dz by volume quadrature of pointwise harmonic parts (slow; audit only)."""
    xf, wf = f.quadrature()
    keep = wf != 0
    return float(sum(w * harmonic_part(h, inner, z) for z, w in zip(xf[keep], wf[keep])))


def _check_disjoint(balls):
    for a in range(len(balls)):
        _check_inside_unit(balls[a])
        for b in range(a + 1, len(balls)):
            if not balls[a].disjoint_from(balls[b]):
                raise DomainError("balls must be pairwise disjoint")


def _pieces(f: TestFunction, ball: Ball):
    terms = f.terms if isinstance(f, Combination) else [(1.0, f)]
    keep = []
    for a, g in terms:
        if ball.contains_ball(g.support):
            keep.append((a, g))
        elif not ball.disjoint_from(g.support):
            raise DomainError(f"{g!r} straddles the boundary of {ball}")
    return Combination(keep) if keep else None


def remainder_functional(balls, f: TestFunction, spec=None) -> TestFunction:
    """f - sum_i (f 1_{B_i} - mu_{f 1_{B_i}}), i.e. the part of f seen by the harmonic remainder."""
    balls = list(balls)
    _check_disjoint(balls)
    terms = [(1.0, f)]
    for b in balls:
        piece = _pieces(f, b)
        if piece is not None:
            terms.append((-1.0, bulk_functional(b, piece, spec)))
    return Combination(terms)


def multi_ball_remainder(h: FieldSample, balls, f: TestFunction) -> float:
    return pair(h, remainder_functional(balls, f, h.spec))


def increment_functional(inner: Ball, mid: Ball, z, spec=None) -> TestFunction:
    _check_nesting(inner, mid)
    return Combination([(1.0, poisson_measure(inner, z, spec)), (-1.0, poisson_measure(mid, z, spec))])


def _check_nesting(inner: Ball, mid: Ball):
    _check_inside_unit(mid)
    if not mid.contains_ball(inner):
        raise DomainError("inner ball is not contained in the middle ball")


def nested_increment(h: FieldSample, inner: Ball, mid: Ball, z) -> float:
    """phi_inner(z) - phi_mid(z); zero when the balls coincide."""
    _check_nesting(inner, mid)
    if inner == mid:
        return 0.0
    return pair(h, increment_functional(inner, mid, z, h.spec))


# ---------------------------------------------------------------------------
# ensemble rows and dumps


def harmonic_part_rows(model: FieldModel, inner: Ball, zs, order: int | None = None) -> np.ndarray:
    """Rows of phi(z) for each z, sharing one boundary quadrature of the inner sphere.

    ``order`` overrides the sphere-rule degree (default: the largest any z needs).
    """
    _check_inside_unit(inner)
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    measures = [poisson_measure(inner, z, model.spec) for z in zs]
    ball = model.ball
    if np.allclose(inner.c, ball.c, atol=1e-14) and order is None:
        return np.stack([model.functional(m) for m in measures])
    if order is None:
        order = max(m.order(model.basis.alpha_max / ball.radius) for m in measures)
    nodes, w = sphere_points(inner, order)
    W = w[:, None] * poisson_kernel(inner, zs[None, :, :], nodes[:, None, :])
    ov = ball.radius ** (-ball.dim / 2.0) * model.basis.overlaps(ball.to_unit(nodes), W)
    return model.sigma * ov


def mean_value_nodes(z, radius: float, dim: int, order: int = 16):
    """Nodes and probability weights on the sphere of ``radius`` about z."""
    rule = SphereRule.build(dim, order)
    return np.asarray(z, dtype=float) + radius * rule.nodes, rule.weights


@dataclass
class Decomposition:
    outer: Ball
    inner: Ball
    points: np.ndarray
    phi_values: np.ndarray
    replicas: np.ndarray = field(default=None)
    sub_pairings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.outer.contains_ball(self.inner):
            raise DomainError("inner ball is not contained in outer ball")
        pts = np.atleast_2d(self.points)
        if np.any(np.linalg.norm(pts - self.inner.c, axis=-1) >= self.inner.radius):
            raise DomainError("evaluation points must lie strictly inside the inner ball")
        self.points = pts
        self.phi_values = np.atleast_2d(self.phi_values)
        if not np.all(np.isfinite(self.phi_values)):
            raise DomainError("non-finite harmonic-part values")
        if self.replicas is None:
            self.replicas = np.arange(self.phi_values.shape[0])

    def to_csv(self, path):
        d = self.outer.dim
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replica"] + [f"z{k}" for k in range(d)] + ["phi_value"])
            for rep, vals in zip(self.replicas, self.phi_values):
                for z, v in zip(self.points, vals):
                    w.writerow([int(rep)] + [repr(float(c)) for c in z] + [repr(float(v))])
