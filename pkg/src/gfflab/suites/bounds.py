"""Bound audit: fitted constants for the two- and four-point bounds (deterministic).

The inequalities carry unspecified constants, so each bound is evaluated on a
sequence of refining point grids in (1 - delta)B and the smallest constant that
makes it hold on the grid is reported. A bound fails only if that constant
keeps growing under refinement (|C_fine / C_mid - 1| above the stability
tolerance). For the field itself k2 = G and k4 = g (Wick), so the K4 ratio on
spheres is identically 1 (c(d) = 1, eta = 0).
"""
from __future__ import annotations

import numpy as np

from ..geometry import Ball, green_unit_ball, scaling_s, wick_g4
from ..quadrature import SphereRule
from .common import SuiteContext, fmt_point

NAME = "bounds"
ANCHOR_K2 = "|k2(z1, z2)| <= C(delta) (1 + s(|z1 - z2|)) on (1 - delta)B"
ANCHOR_K4M = "|k4|^4 <= C(delta) prod_i (1 + max_(j != i) s(|z_i - z_j|)^2) on (1 - delta)B"
ANCHOR_K4 = "|k4| <= c(d) delta^(-eta) g on the sphere of radius 1 - delta"
ANCHOR_DIAG = "k2(z1, z2) / s(|z1 - z2|) -> 1 as z2 -> z1 (diagonal singularity b s)"

DELTAS = (0.3, 0.1, 0.03)
LEVELS = ((3, 1), (6, 2), (12, 3))  # (centre-grid resolution m, smallest separation 10^-e)
STABILITY = 0.1
SHAPES = (
    ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)),   # square
    ((0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)),   # collinear
    ((0.0, 0.0), (1.0, 0.0), (0.0, 6.0), (1.0, 6.0)),   # two close pairs
    ((0.0, 0.0), (1.0, 0.0), (0.5, 0.8), (0.5, 0.3)),   # triangle with inner point
)
DIAG_POINT = (0.2, 0.1)
DIAG_SEPARATIONS = (1e-1, 1e-2, 1e-3)
DIAG_TOL = 0.05


def _centres(d: int, delta: float, m: int) -> np.ndarray:
    """Polar grid of m radii (including 0) in (1 - delta)B, m-scaled angular resolution."""
    rule = SphereRule.build(d, 2 * m)
    radii = (1.0 - delta) * np.arange(m + 1) / m
    pts = [np.zeros(d)] + [r * rule.nodes for r in radii[1:]]
    return np.vstack([np.atleast_2d(p) for p in pts])


def _frame(d: int, z):
    """Radial and tangential unit vectors at z (axis-aligned at the origin)."""
    r = np.linalg.norm(z)
    e1 = z / r if r > 1e-12 else np.eye(d)[0]
    e2 = np.eye(d)[1] - e1 * e1[1] if abs(e1[1]) < 0.9 else np.eye(d)[0] - e1 * e1[0]
    return e1, e2 / np.linalg.norm(e2)


def pair_grid(d: int, delta: float, level: int):
    """Pairs (z1, z2) in (1 - delta)B: all centre pairs plus near-diagonal offsets."""
    m, e = LEVELS[level]
    c = _centres(d, delta, m)
    i, j = np.triu_indices(len(c), 1)
    z1, z2 = [c[i]], [c[j]]
    seps = 10.0 ** -np.arange(1, e + 1)
    for z in c:
        for v in _frame(d, z):
            for t in seps:
                for sgn in (1.0, -1.0):
                    w = z + sgn * t * v
                    if np.linalg.norm(w) <= 1.0 - delta:
                        z1.append(z[None])
                        z2.append(w[None])
    return np.vstack(z1), np.vstack(z2)


def quad_grid(d: int, delta: float, level: int):
    """Quadruples: scaled copies of the fixed shapes about every centre, separations to 10^-e."""
    m, e = LEVELS[level]
    c = _centres(d, delta, m)
    scales = 10.0 ** -np.arange(0, e + 1) * 0.1
    out = []
    for z in c:
        e1, e2 = _frame(d, z)
        for t in scales:
            for shape in SHAPES:
                q = np.array([z + t * (a * e1 + b * e2) for a, b in shape])
                q -= q.mean(axis=0) - z
                if np.all(np.linalg.norm(q, axis=1) <= 1.0 - delta):
                    out.append(q)
    return np.stack(out)  # (Q, 4, d)


def k2_ratio(d: int, z1, z2):
    """|G(z1, z2)| / (1 + s(|z1 - z2|))."""
    g = green_unit_ball(z1, z2, d)
    return np.abs(g) / (1.0 + scaling_s(np.linalg.norm(z1 - z2, axis=-1), d))


def k4_moment_ratio(d: int, quads):
    ball = Ball.unit(d)
    g = wick_g4(quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3], ball)
    dist = np.linalg.norm(quads[:, :, None, :] - quads[:, None, :, :], axis=-1)
    dist[:, np.arange(4), np.arange(4)] = np.inf
    s_near = scaling_s(dist.min(axis=2), d)
    return np.abs(g) ** 4 / np.prod(1.0 + s_near**2, axis=1)


def fitted_k2(d: int, delta: float):
    return [float(k2_ratio(d, *pair_grid(d, delta, lv)).max()) for lv in range(len(LEVELS))]


def fitted_k4(d: int, delta: float):
    return [float(k4_moment_ratio(d, quad_grid(d, delta, lv)).max()) for lv in range(len(LEVELS))]


def sphere_quadruple(d: int, delta: float) -> np.ndarray:
    """Equidistant-style quadruple on the sphere of radius 1 - delta."""
    r = 1.0 - delta
    if d == 2:
        ang = np.pi / 2 * np.arange(4)
        return r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3.0)
    return r * tet


def k4_sphere_ratio(d: int, delta: float) -> float:
    """k4 / g at a sphere quadruple; k4 is the Wick sum of the Green's function, g its definition."""
    q = sphere_quadruple(d, delta)
    k4 = float(wick_g4(*q, Ball.unit(d)))
    G = lambda a, b: float(green_unit_ball(q[a], q[b], d))
    g = G(0, 1) * G(2, 3) + G(0, 2) * G(1, 3) + G(0, 3) * G(1, 2)
    return k4 / g


def diagonal_ratios(d: int):
    z = np.array(DIAG_POINT + (0.0,) * (d - 2))
    e = np.eye(d)[0]
    return [float(green_unit_ball(z, z + t * e, d) / scaling_s(t, d)) for t in DIAG_SEPARATIONS]


def ratio_grid_rows(d: int):
    """(bound, delta, level, separation, max ratio) rows for plot data.

    k2 ratios are maximized over logarithmic separation bins (geometric bin
    centre reported); k4 rows carry the fitted constant per level.
    """
    edges = 10.0 ** np.arange(-3.5, 0.76, 0.25)
    centres = np.sqrt(edges[1:] * edges[:-1])
    rows = []
    for delta in DELTAS:
        for lv in range(len(LEVELS)):
            z1, z2 = pair_grid(d, delta, lv)
            sep = np.linalg.norm(z1 - z2, axis=-1)
            ratio = k2_ratio(d, z1, z2)
            idx = np.digitize(sep, edges) - 1
            for b, c in enumerate(centres):
                sel = ratio[idx == b]
                if sel.size:
                    rows.append(("k2", delta, lv, float(c), float(sel.max())))
        for lv, c in enumerate(fitted_k4(d, delta)):
            rows.append(("k4_moment", delta, lv, 0.0, c))
        rows.append(("k4_sphere", delta, 0, 0.0, k4_sphere_ratio(d, delta)))
    return rows


def _stability(values) -> float:
    return abs(values[-1] / values[-2] - 1.0)


def run(ctx: SuiteContext) -> None:
    d = ctx.dim
    tol = ctx.tol("bound_stability", STABILITY)
    for delta in DELTAS:
        c = fitted_k2(d, delta)
        ctx.det(f"fitted C(delta) for the k2 bound, delta = {delta}", ANCHOR_K2, c[-1], c[-2], _stability(c),
                tol, kind="fit",
                note="C on refining grids: " + ", ".join(f"{v:.6g}" for v in c) + "; residual |C_fine/C_mid - 1|")
    for delta in DELTAS:
        c = fitted_k4(d, delta)
        ctx.det(f"fitted C(delta) for the k4 moment bound, delta = {delta}", ANCHOR_K4M, c[-1], c[-2],
                _stability(c), tol, kind="fit",
                note="C on refining grids: " + ", ".join(f"{v:.6g}" for v in c) + "; residual |C_fine/C_mid - 1|")

    ratios = np.array([k4_sphere_ratio(d, delta) for delta in DELTAS])
    slope, intercept = np.polyfit(np.log(DELTAS), np.log(ratios), 1)
    eta, c_d = float(-slope) + 0.0, float(np.exp(intercept))
    ctx.det("k4 / g on spheres of radius 1 - delta equals 1", ANCHOR_K4, float(ratios.max()), 1.0,
            float(np.max(np.abs(ratios - 1.0))), 1e-12,
            note="ratios at delta " + ", ".join(f"{t}: {v:.15g}" for t, v in zip(DELTAS, ratios)))
    ctx.det("fitted eta lies in [0, 1)", ANCHOR_K4, eta, 0.0, max(0.0, -eta - 1e-12, eta - 1.0 + 1e-12), 0.0,
            kind="fit", note=f"fit c(d) delta^(-eta): c(d) = {c_d:.6g}, eta = {eta:.3g}")

    diag = diagonal_ratios(d)
    z = fmt_point(DIAG_POINT + (0.0,) * (d - 2))
    ctx.det(f"G(z, z + t e) / s(t) within 5% of 1 at t = {DIAG_SEPARATIONS[-1]}, z = {z}", ANCHOR_DIAG, diag[-1],
            1.0, abs(diag[-1] - 1.0), DIAG_TOL,
            note="ratios at t = " + ", ".join(f"{t:g}: {v:.6g}" for t, v in zip(DIAG_SEPARATIONS, diag)))
    steps = np.abs(np.array(diag) - 1.0)
    ctx.det("|G/s - 1| decreases as t -> 0", ANCHOR_DIAG, float(steps[-1]), float(steps[0]),
            float(max(0.0, np.diff(steps).max())), 0.0)
