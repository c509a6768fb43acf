"""Closed-form kernels on balls: scaling function, Green's function, Poisson kernel.

All point arguments accept arrays of shape ``(..., d)``; the kernels broadcast
over the leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a kernel."""


@dataclass(frozen=True)
class Ball:
    """The ball ``center + radius * B`` in dimension ``dim``."""

    dim: int
    center: tuple
    radius: float = 1.0

    def __post_init__(self):
        if int(self.dim) < 2:
            raise DomainError(f"dim must be >= 2, got {self.dim}")
        center = tuple(float(c) for c in np.ravel(self.center))
        if len(center) != self.dim:
            raise DomainError(f"center has {len(center)} entries, expected {self.dim}")
        if not self.radius > 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def unit(cls, dim: int) -> "Ball":
        return cls(dim, (0.0,) * dim, 1.0)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center)

    def to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.c) / self.radius

    def from_unit(self, u):
        return self.c + self.radius * np.asarray(u, dtype=float)

    def contains_ball(self, other: "Ball", tol: float = 1e-12) -> bool:
        gap = self.radius - other.radius - np.linalg.norm(other.c - self.c)
        return bool(gap >= -tol)

    def disjoint_from(self, other: "Ball") -> bool:
        return bool(np.linalg.norm(other.c - self.c) >= self.radius + other.radius)

    def is_unit(self) -> bool:
        return self.radius == 1.0 and not any(self.center)


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta_bar: tuple

    def __post_init__(self):
        th = np.asarray(self.theta_bar, dtype=float)
        if self.r < 0:
            raise DomainError("r must be nonnegative")
        if abs(np.linalg.norm(th) - 1.0) > 1e-12:
            raise DomainError("theta_bar must be a unit vector")
        object.__setattr__(self, "theta_bar", tuple(th))

    @classmethod
    def from_cartesian(cls, z) -> "PolarPoint":
        z = np.asarray(z, dtype=float)
        r = float(np.linalg.norm(z))
        if r == 0.0:
            th = np.zeros_like(z)
            th[0] = 1.0
        else:
            th = z / r
        return cls(r, tuple(th))

    def to_cartesian(self) -> np.ndarray:
        return self.r * np.asarray(self.theta_bar)


def scaling_s(r, d: int):
    """``-log r`` in d = 2 and ``r**(2-d)`` for d >= 3."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("scaling_s needs r > 0")
    if d < 2:
        raise DomainError(f"unsupported dimension {d}")
    out = -np.log(r) if d == 2 else r ** (2.0 - d)
    return out if out.ndim else float(out)


def green_constant(d: int) -> float:
    """``kappa_d`` with ``-Laplace G = kappa_d * delta``: 2 pi for d = 2, (d - 2) |S^{d-1}| above."""
    if d < 2:
        raise DomainError(f"unsupported dimension {d}")
    if d == 2:
        return 2.0 * math.pi
    return (d - 2) * 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def image_point(x):
    """Inversion ``x / |x|^2`` in the unit sphere."""
    x = np.asarray(x, dtype=float)
    n2 = np.sum(x * x, axis=-1, keepdims=True)
    if np.any(n2 == 0):
        raise DomainError("image_point is undefined at the origin")
    return x / n2


def _inverted_distance(x, y):
    # |x| |y - x~|, written without dividing by |x| so the origin needs no special case
    xx = np.sum(x * x, axis=-1)
    yy = np.sum(y * y, axis=-1)
    xy = np.sum(x * y, axis=-1)
    return np.sqrt(np.maximum(xx * yy - 2.0 * xy + 1.0, 0.0))


def _check_closed_unit(u, what="point", tol=1e-12):
    if np.any(np.sum(u * u, axis=-1) > (1.0 + tol) ** 2):
        raise DomainError(f"{what} outside the closed ball")


def green_unit_ball(x, y, d: int | None = None):
    """Zero-boundary Green's function of the unit ball, ``s(|x-y|) - s(|x||y-x~|)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[-1] if d is None else d
    _check_closed_unit(x)
    _check_closed_unit(y)
    dist = np.linalg.norm(x - y, axis=-1)
    if np.any(dist < 1e-14):
        raise DomainError("green function is singular on the diagonal")
    return scaling_s(dist, d) - scaling_s(_inverted_distance(x, y), d)


def _scale_factor(ball: Ball) -> float:
    return 1.0 if ball.dim == 2 else ball.radius ** (2.0 - ball.dim)


def green_ball(x, y, ball: Ball):
    """Green's function of ``ball``; unit-ball values mapped by the covariance scaling rule."""
    u = ball.to_unit(x)
    v = ball.to_unit(y)
    return _scale_factor(ball) * green_unit_ball(u, v, ball.dim)


def singular_part(dist, ball: Ball):
    """The free-space part ``r^{2-d} s(dist / r)`` of the Green's function of ``ball``."""
    return _scale_factor(ball) * scaling_s(np.asarray(dist, dtype=float) / ball.radius, ball.dim)


def green_regularized(x, y, ball: Ball):
    """Green's function minus its free-space singularity; finite on the diagonal."""
    u = ball.to_unit(x)
    v = ball.to_unit(y)
    _check_closed_unit(u)
    _check_closed_unit(v)
    return -_scale_factor(ball) * scaling_s(_inverted_distance(u, v), ball.dim)


def harmonic_diff_kernel(x, y, outer: Ball, inner: Ball):
    """Covariance ``G^outer - G^inner`` of the harmonic part of the Markov decomposition."""
    if not outer.contains_ball(inner):
        raise DomainError("inner ball is not contained in outer ball")
    if inner.dim != outer.dim:
        raise DomainError("dimension mismatch")
    h = green_regularized(x, y, outer) - green_regularized(x, y, inner)
    if outer.dim == 2:
        # -log(rho/R_o) + log(rho/R_i)
        h = h + np.log(outer.radius / inner.radius)
    return h


def wick_g4(z1, z2, z3, z4, ball: Ball):
    """Four-point function of the zero-boundary GFF: sum over the three pairings."""
    zs = [np.asarray(z, dtype=float) for z in (z1, z2, z3, z4)]
    for i in range(4):
        for j in range(i + 1, 4):
            if np.any(np.linalg.norm(zs[i] - zs[j], axis=-1) < 1e-14 * ball.radius):
                raise DomainError("wick_g4 needs pairwise distinct points")
    g = lambda a, b: green_ball(zs[a], zs[b], ball)
    return g(0, 1) * g(2, 3) + g(0, 2) * g(1, 3) + g(0, 3) * g(1, 2)


def poisson_kernel(ball: Ball, z, theta):
    """Poisson kernel of ``ball`` at interior ``z`` and boundary point ``theta``.

    The density is taken with respect to the uniform probability measure on the
    boundary sphere, so it is identically 1 at the center.
    """
    z = np.asarray(z, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d, R = ball.dim, ball.radius
    zr = np.linalg.norm(z - ball.c, axis=-1)
    if np.any(zr >= R):
        raise DomainError("poisson_kernel needs z strictly inside the ball")
    dist = np.linalg.norm(z - theta, axis=-1)
    return R ** (d - 2) * (R * R - zr * zr) / dist**d
