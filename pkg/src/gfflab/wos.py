"""Walk-on-spheres estimate of harmonic measure on the boundary of carved ∩ outer."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .geometry import Ball, DomainError, poisson_kernel
from .quadrature import gauss_interval
from .stats import replica_rng

STEP_FRACTION = 0.95
SHELL_FRACTION = 1e-4
CHUNK_STEPS = 48
MAX_STEPS = 100_000


@dataclass
class HittingRecord:
    """Exit points of the walks and which boundary piece each one reached."""

    start: np.ndarray
    outer: Ball
    carved: Ball
    exits: np.ndarray
    on_carved: np.ndarray
    steps: np.ndarray
    seed: int

    @property
    def n_walks(self) -> int:
        return len(self.exits)

    @property
    def carved_hits(self) -> int:
        return int(self.on_carved.sum())

    @property
    def outer_hits(self) -> int:
        return self.n_walks - self.carved_hits

    def angles(self, axis=None):
        """Exit angle about the carved center (d = 2) or cos of polar angle about ``axis`` (d = 3)."""
        u = self.exits[self.on_carved] - self.carved.c
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        if self.carved.dim == 2:
            return np.arctan2(u[:, 1], u[:, 0])
        axis = _unit(axis if axis is not None else np.eye(self.carved.dim)[0])
        return u @ axis

    def binned(self, n_bins: int = 16, axis=None) -> np.ndarray:
        return np.bincount(_bin_index(self.angles(axis), n_bins, self.carved.dim), minlength=n_bins)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _bin_index(a, n_bins, d):
    if d == 2:
        k = np.floor((a + math.pi) / (2 * math.pi) * n_bins)
    else:
        k = np.floor((a + 1.0) / 2.0 * n_bins)
    return np.clip(k, 0, n_bins - 1).astype(int)


def _distances(x, outer, carved):
    do = outer.radius - np.linalg.norm(x - outer.c, axis=-1)
    dc = carved.radius - np.linalg.norm(x - carved.c, axis=-1)
    return do, dc


def _directions(rng, count, d):
    g = rng.standard_normal((count, d))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def wos_harmonic_measure(start, outer: Ball, carved: Ball, n_walks: int, rng_seed: int,
                         block: int = 4096) -> HittingRecord:
    """Run ``n_walks`` walks from ``start`` until they are within the shell of the boundary.

    Each walk w uses its own stream from (rng_seed, w), consumed in chunks of
    ``CHUNK_STEPS`` directions, so results do not depend on ``block``.
    """
    start = np.asarray(start, dtype=float)
    if n_walks <= 0:
        raise DomainError("n_walks must be positive")
    if outer.dim != carved.dim or start.shape != (outer.dim,):
        raise DomainError("dimension mismatch")
    do, dc = _distances(start, outer, carved)
    if do <= 0 or dc <= 0:
        raise DomainError("start lies outside carved ∩ outer")
    d = outer.dim
    shell = SHELL_FRACTION * outer.radius
    exits = np.empty((n_walks, d))
    on_carved = np.empty(n_walks, dtype=bool)
    steps = np.empty(n_walks, dtype=int)
    for lo in range(0, n_walks, block):
        hi = min(lo + block, n_walks)
        m = hi - lo
        rngs = [replica_rng(rng_seed, w) for w in range(lo, hi)]
        dirs = np.stack([_directions(r, CHUNK_STEPS, d) for r in rngs])
        x = np.tile(start, (m, 1))
        count = np.zeros(m, dtype=int)
        active = np.arange(m)
        while len(active):
            do, dc = _distances(x[active], outer, carved)
            dist = np.minimum(do, dc)
            done = dist < shell
            if np.any(done):
                idx = active[done]
                hit_c = dc[done] <= do[done]
                # project onto the nearer boundary sphere
                ctr = np.where(hit_c[:, None], carved.c, outer.c)
                rad = np.where(hit_c, carved.radius, outer.radius)
                v = x[idx] - ctr
                x[idx] = ctr + rad[:, None] * v / np.linalg.norm(v, axis=-1, keepdims=True)
                on_carved[lo + idx] = hit_c
                steps[lo + idx] = count[idx]
                active, dist = active[~done], dist[~done]
            if not len(active):
                break
            k = count[active] % CHUNK_STEPS
            refill = active[(k == 0) & (count[active] > 0)]
            for w in refill:
                dirs[w] = _directions(rngs[w], CHUNK_STEPS, d)
            if np.any(count[active] > MAX_STEPS):
                raise RuntimeError("walk-on-spheres did not terminate")
            x[active] += STEP_FRACTION * dist[:, None] * dirs[active, k]
            count[active] += 1
        exits[lo:hi] = x
    return HittingRecord(start, outer, carved, exits, on_carved, steps, int(rng_seed))


def poisson_bin_probabilities(ball: Ball, z, n_bins: int = 16, axis=None) -> np.ndarray:
    """Exact exit probabilities of the angular bins used by ``HittingRecord.binned``."""
    z = np.asarray(z, dtype=float)
    d = ball.dim
    probs = np.empty(n_bins)
    if d == 2:
        edges = np.linspace(-math.pi, math.pi, n_bins + 1)
        for b in range(n_bins):
            t, w = gauss_interval(edges[b], edges[b + 1], 64)
            pts = ball.c + ball.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
            probs[b] = np.sum(w * poisson_kernel(ball, z, pts)) / (2 * math.pi)
        return probs
    if d != 3:
        raise DomainError("binning is implemented for d = 2, 3")
    axis = _unit(axis if axis is not None else np.eye(3)[0])
    # orthonormal frame (axis, e1, e2)
    e1 = np.linalg.svd(axis[None, :])[2][1]
    e2 = np.cross(axis, e1)
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    tphi, wphi = gauss_interval(0.0, 2 * math.pi, 96)
    for b in range(n_bins):

        def band(t):
            s = math.sqrt(max(1.0 - t * t, 0.0))
            u = t * axis + s * (np.cos(tphi)[:, None] * e1 + np.sin(tphi)[:, None] * e2)
            return float(np.sum(wphi * poisson_kernel(ball, z, ball.c + ball.radius * u)))

        val, _ = integrate.quad(band, edges[b], edges[b + 1], epsabs=1e-12, epsrel=1e-10)
        probs[b] = val / (4 * math.pi)
    return probs
