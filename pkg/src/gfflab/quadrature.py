"""Sphere and ball quadrature rules."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Ball


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d: int) -> float:
    return sphere_area(d) / d


@lru_cache(maxsize=256)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_interval(a: float, b: float, n: int):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class SphereRule:
    """Product rule on S^{d-1} for the uniform probability measure.

    Integrates every spherical harmonic of degree <= ``order`` exactly.
    d = 2 uses ``order + 1`` equispaced angles; d = 3 uses Gauss-Legendre nodes
    in cos(polar angle) times equispaced azimuths.
    """

    dim: int
    order: int
    nodes: np.ndarray = field(repr=False, compare=False)
    weights: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def build(cls, dim: int, order: int) -> "SphereRule":
        return _sphere_rule(int(dim), int(order))

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.tensordot(np.asarray(values), self.weights, axes=([-1], [0]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k}" for k in range(self.dim)] + ["weight"])
            for node, wt in zip(self.nodes, self.weights):
                w.writerow([repr(float(v)) for v in node] + [repr(float(wt))])

    @classmethod
    def from_csv(cls, path, order: int = -1) -> "SphereRule":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in row] for row in rows[1:]])
        return cls(data.shape[1] - 1, order, data[:, :-1], data[:, -1])


@lru_cache(maxsize=64)
def _sphere_rule(dim: int, order: int) -> SphereRule:
    if order < 0:
        raise ValueError("order must be nonnegative")
    if dim == 2:
        m = order + 1
        phi = 2.0 * np.pi * np.arange(m) / m
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.full(m, 1.0 / m)
    elif dim == 3:
        nt = order // 2 + 1
        nphi = order + 1
        t, wt = gauss_legendre(nt)
        phi = 2.0 * np.pi * np.arange(nphi) / nphi
        st = np.sqrt(1.0 - t * t)
        nodes = np.stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.repeat(t, nphi),
            ],
            axis=-1,
        )
        weights = np.outer(wt / 2.0, np.full(nphi, 1.0 / nphi)).ravel()
    else:
        raise ValueError(f"sphere rules are implemented for d in (2, 3), got {dim}")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(dim, order, nodes, weights)


def ball_rule(ball: Ball, n_radial: int, sphere_order: int, r_inner: float = 0.0):
    """Polar product rule for Lebesgue measure on a ball (or an annulus ``r_inner < rho < R``).

    Returns ``(nodes, weights)`` with weights including the volume element.
    """
    d = ball.dim
    rule = SphereRule.build(d, sphere_order)
    rho, wr = gauss_interval(r_inner, ball.radius, n_radial)
    wr = wr * rho ** (d - 1) * sphere_area(d)
    nodes = ball.c + (rho[:, None, None] * rule.nodes[None, :, :]).reshape(-1, d)
    weights = np.outer(wr, rule.weights).ravel()
    return nodes, weights


def sphere_points(ball: Ball, sphere_order: int):
    """Nodes on the boundary sphere of ``ball`` with uniform-probability weights."""
    rule = SphereRule.build(ball.dim, sphere_order)
    return ball.c + ball.radius * rule.nodes, rule.weights
