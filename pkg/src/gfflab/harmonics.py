"""Spherical harmonics, Bessel zeros and the Dirichlet eigenbasis of the unit ball (d = 2, 3).

Conventions
-----------
* psi_{n,j} is orthonormal for the uniform *probability* measure on the sphere.
* d = 2: j = 1 is sqrt(2) cos(n theta), j = 2 is sqrt(2) sin(n theta); psi_{0,1} = 1.
* d = 3: real harmonics, j = 1..2n+1 maps to m = -n..n in increasing order;
  m < 0 carries sin(|m| phi), m > 0 carries cos(m phi).
* e_{n,j,i}(z) = c_{n,i} f_n(alpha_{n,i} |z|) psi_{n,j}(z/|z|) with f_n = J_n (d = 2) or the
  spherical Bessel j_n (d = 3); unit norm in L^2(B, Lebesgue), eigenvalue alpha^2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import optimize, special

from .geometry import DomainError
from .quadrature import SphereRule, sphere_area

SUPPORTED_DIMS = (2, 3)


class BesselBracketError(RuntimeError):
    """A zero could not be bracketed; indicates a bug, not bad input."""


def _check_dim(d):
    if d not in SUPPORTED_DIMS:
        raise DomainError(f"the eigenbasis is implemented for d in {SUPPORTED_DIMS}, got {d}")


def multiplicity(n: int, d: int) -> int:
    """Number of independent degree-n spherical harmonics on S^{d-1}."""
    _check_dim(d)
    if n < 0:
        raise DomainError("degree must be nonnegative")
    if d == 2:
        return 1 if n == 0 else 2
    return 2 * n + 1


# ---------------------------------------------------------------------------
# angular part


def _normalized_legendre(n_max: int, t):
    """P[n][m] with  (1/2) int_{-1}^{1} P[n][m](t)^2 dt = 1 for m <= n <= n_max."""
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.maximum(1.0 - t * t, 0.0))
    P = [[None] * (n + 1) for n in range(n_max + 1)]
    pmm = np.ones_like(t)
    for m in range(n_max + 1):
        if m > 0:
            pmm = pmm * s * math.sqrt((2 * m + 1) / (2 * m))
        P[m][m] = pmm
        if m + 1 <= n_max:
            P[m + 1][m] = math.sqrt(2 * m + 3) * t * pmm
        for n in range(m + 2, n_max + 1):
            a = math.sqrt((4 * n * n - 1) / (n * n - m * m))
            b = math.sqrt(((n - 1) ** 2 - m * m) / (4 * (n - 1) ** 2 - 1))
            P[n][m] = a * (t * P[n - 1][m] - b * P[n - 2][m])
    return P


def psi_all(n_max: int, theta_bar, d: int):
    """All psi_{n,j} with n <= n_max at unit vectors ``theta_bar`` (shape (P, d)).

    Returns a list whose n-th entry has shape (M_n, P).
    """
    _check_dim(d)
    th = np.atleast_2d(np.asarray(theta_bar, dtype=float))
    if d == 2:
        phi = np.arctan2(th[:, 1], th[:, 0])
        out = [np.ones((1, len(phi)))]
        for n in range(1, n_max + 1):
            out.append(math.sqrt(2.0) * np.stack([np.cos(n * phi), np.sin(n * phi)]))
        return out
    t = np.clip(th[:, 2], -1.0, 1.0)
    phi = np.arctan2(th[:, 1], th[:, 0])
    P = _normalized_legendre(n_max, t)
    out = []
    for n in range(n_max + 1):
        rows = []
        for m in range(-n, n + 1):
            if m == 0:
                rows.append(P[n][0])
            elif m > 0:
                rows.append(math.sqrt(2.0) * P[n][m] * np.cos(m * phi))
            else:
                rows.append(math.sqrt(2.0) * P[n][-m] * np.sin(-m * phi))
        out.append(np.stack(rows))
    return out


def eval_psi(n: int, j: int, theta_bar, d: int | None = None):
    """psi_{n,j} at one unit vector or an array of them."""
    th = np.asarray(theta_bar, dtype=float)
    d = th.shape[-1] if d is None else d
    M = multiplicity(n, d)
    if not 1 <= j <= M:
        raise DomainError(f"j must lie in 1..{M} for degree {n}, got {j}")
    vals = psi_all(n, th.reshape(-1, d), d)[n][j - 1]
    return vals.reshape(th.shape[:-1]) if th.ndim > 1 else float(vals[0])


def solid_harmonic(n: int, j: int, z, d: int | None = None):
    """|z|^n psi_{n,j}(z/|z|): harmonic polynomial of degree n."""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1] if d is None else d
    flat = z.reshape(-1, d)
    r = np.linalg.norm(flat, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    th = flat / safe[:, None]
    th[r == 0] = np.eye(d)[0]
    vals = psi_all(n, th, d)[n][j - 1] * r**n
    if n == 0:
        vals = np.ones_like(r) * vals
    return vals.reshape(z.shape[:-1]) if z.ndim > 1 else float(vals[0])


# ---------------------------------------------------------------------------
# radial part


def radial_function(n: int, x, d: int):
    """J_n(x) for d = 2, spherical Bessel j_n(x) for d = 3."""
    if d == 2:
        return special.jv(n, x)
    return special.spherical_jn(n, x)


def _downward_values(n_top: int, x, d: int, x_direct: float = 2.0):
    """Radial functions of orders 0..n_top on ``x`` by downward recurrence.

    Starting from two exact top orders, the recurrence is stable in both the
    monotone (x < n) and oscillatory regimes; small arguments are evaluated directly.
    """
    out = np.empty((n_top + 1, len(x)))
    small = x < x_direct
    big = ~small
    xb = x[big]
    orders = np.arange(n_top + 1)[:, None]
    out[:, small] = radial_function(orders, x[small][None, :], d)
    top = radial_function(n_top, xb, d)
    above = radial_function(n_top + 1, xb, d)
    out[n_top, big] = top
    shift = 0.0 if d == 2 else 0.5
    for n in range(n_top, 0, -1):
        below = (2.0 * (n + shift) / xb) * top - above
        out[n - 1, big] = below
        above, top = top, below
    return out


class RadialTable:
    """Cubic Hermite interpolant of the order-n radial function on [0, x_max].

    With step 4e-3 the interpolation error is below 1e-12, and evaluation is
    far cheaper than the special-function call it replaces.
    """

    def __init__(self, n: int, d: int, values, slopes, step: float):
        self.n, self.d, self.step = n, d, step
        self.values = values
        self.slopes = step * slopes
        self.x_max = step * (len(values) - 1)

    @classmethod
    def build_all(cls, n_max: int, d: int, x_max: float, step: float = 4e-3):
        """Tables for orders 0..n_max; derivatives come from the three-term recurrences."""
        m = int(math.ceil(x_max / step)) + 2
        grid = step * np.arange(m)
        vals = _downward_values(n_max + 1, grid, d)
        safe = np.where(grid > 0, grid, 1.0)
        tables = []
        for n in range(n_max + 1):
            if n == 0:
                der = -vals[1]
            elif d == 2:
                der = 0.5 * (vals[n - 1] - vals[n + 1])
            else:
                der = vals[n - 1] - (n + 1) * vals[n] / safe
                der[0] = 1.0 / 3.0 if n == 1 else 0.0
            tables.append(cls(n, d, vals[n], der, step))
        return tables

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > self.x_max):
            return radial_function(self.n, x, self.d)
        u = x / self.step
        k = np.minimum(u.astype(np.intp), len(self.values) - 2)
        t = u - k
        t2 = t * t
        t3 = t2 * t
        y0, y1 = self.values[k], self.values[k + 1]
        m0, m1 = self.slopes[k], self.slopes[k + 1]
        return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0
                + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1)


def _cyl_order(n: int, d: int) -> float:
    # j_n(x) is proportional to J_{n+1/2}(x), so both cases reduce to cylinder functions
    return n + (0.0 if d == 2 else 0.5)


@lru_cache(maxsize=64)
def _zero_table(d: int, n_max: int, count: int):
    """Zeros [n][k] of the order-n radial function, n <= n_max, k < count.

    Built upward in n from the interlacing j_{nu,k} < j_{nu+1,k} < j_{nu,k+1}.
    """
    nu0 = _cyl_order(0, d)
    base_count = count + n_max
    k = np.arange(1, base_count + 1)
    if d == 3:
        prev = np.pi * k  # zeros of sin(x)/x
    else:
        prev = np.array([_bisect_zero(0.0, (kk - 0.5) * np.pi, kk * np.pi) for kk in k])
    table = [prev[:count].copy()]
    for n in range(1, n_max + 1):
        nu = nu0 + n
        m = base_count - n
        cur = np.array([_bisect_zero(nu, prev[q], prev[q + 1]) for q in range(m)])
        table.append(cur[:count].copy())
        prev = cur
    return table


def _bisect_zero(nu: float, a: float, b: float) -> float:
    f = lambda x: special.jv(nu, x)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fa * fb > 0:
        raise BesselBracketError(f"no sign change for J_{nu} on [{a}, {b}]")
    x = optimize.brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # one Newton step from the bracketed root
    dfx = special.jvp(nu, x)
    if dfx != 0.0:
        x1 = x - f(x) / dfx
        if a < x1 < b and abs(f(x1)) <= abs(f(x)):
            x = x1
    return float(x)


def radial_zero(n: int, i: int, d: int) -> float:
    """i-th positive zero (i >= 1) of J_n (d = 2) or j_n (d = 3)."""
    _check_dim(d)
    if n < 0 or i < 1:
        raise DomainError("need n >= 0 and i >= 1")
    return float(_zero_table(d, n, i)[n][i - 1])


def _norm_constant(n: int, alpha, d: int):
    # int_0^1 f_n(alpha r)^2 r^{d-1} dr = f_{n+1}(alpha)^2 / 2 at a zero of f_n
    return 1.0 / np.sqrt(sphere_area(d) * 0.5 * radial_function(n + 1, alpha, d) ** 2)


@dataclass(frozen=True)
class DirichletEigenfunction:
    dim: int
    n: int
    j: int
    i: int
    alpha: float
    norm: float

    @property
    def eigenvalue(self) -> float:
        return self.alpha**2

    def radial(self, r):
        return self.norm * radial_function(self.n, self.alpha * np.asarray(r, dtype=float), self.dim)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        flat = z.reshape(-1, self.dim)
        r = np.linalg.norm(flat, axis=-1)
        th = _directions(flat, r)
        vals = self.radial(r) * psi_all(self.n, th, self.dim)[self.n][self.j - 1]
        vals = np.where(r <= 1.0, vals, 0.0)
        return vals.reshape(z.shape[:-1]) if z.ndim > 1 else float(vals[0])


def _directions(flat, r):
    safe = np.where(r > 0, r, 1.0)
    th = flat / safe[:, None]
    if np.any(r == 0):
        th[r == 0] = np.eye(flat.shape[1])[0]
    return th


def eigenfunction(n: int, j: int, i: int, d: int) -> DirichletEigenfunction:
    M = multiplicity(n, d)
    if not 1 <= j <= M:
        raise DomainError(f"j must lie in 1..{M}")
    alpha = radial_zero(n, i, d)
    return DirichletEigenfunction(d, n, j, i, alpha, float(_norm_constant(n, alpha, d)))


# ---------------------------------------------------------------------------
# truncated basis


@dataclass(frozen=True)
class BasisSpec:
    dim: int
    n_max: int
    k_max: int

    def __post_init__(self):
        _check_dim(self.dim)
        if self.n_max < 0 or self.k_max < 1:
            raise DomainError("need n_max >= 0 and k_max >= 1")

    @property
    def mode_count(self) -> int:
        return sum(multiplicity(n, self.dim) for n in range(self.n_max + 1)) * self.k_max


DEFAULT_TRUNCATION = {2: (24, 40), 3: (12, 24)}


def default_spec(d: int) -> BasisSpec:
    n_max, k_max = DEFAULT_TRUNCATION[d]
    return BasisSpec(d, n_max, k_max)


class Basis:
    """Truncated eigenbasis, modes ordered by (n, j, i) lexicographically."""

    def __init__(self, spec: BasisSpec):
        self.spec = spec
        d, N, K = spec.dim, spec.n_max, spec.k_max
        zeros = _zero_table(d, N, K)
        self.alphas = [np.asarray(zeros[n]) for n in range(N + 1)]
        self.norms = [_norm_constant(n, self.alphas[n], d) for n in range(N + 1)]
        self.offsets = []
        off = 0
        for n in range(N + 1):
            self.offsets.append(off)
            off += multiplicity(n, d) * K
        self.size = off

    @property
    def dim(self):
        return self.spec.dim

    @cached_property
    def table(self):
        """Per-mode arrays n, j, i, alpha, lam, norm in canonical order."""
        d, K = self.dim, self.spec.k_max
        rows = {k: [] for k in ("n", "j", "i", "alpha", "lam", "norm")}
        for n in range(self.spec.n_max + 1):
            for j in range(1, multiplicity(n, d) + 1):
                rows["n"].append(np.full(K, n))
                rows["j"].append(np.full(K, j))
                rows["i"].append(np.arange(1, K + 1))
                rows["alpha"].append(self.alphas[n])
                rows["lam"].append(self.alphas[n] ** 2)
                rows["norm"].append(self.norms[n])
        return {k: np.concatenate(v) for k, v in rows.items()}

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.table["lam"]

    @property
    def alpha_max(self) -> float:
        return float(max(a[-1] for a in self.alphas))

    def index(self, n: int, j: int, i: int) -> int:
        K = self.spec.k_max
        if not (0 <= n <= self.spec.n_max and 1 <= j <= multiplicity(n, self.dim) and 1 <= i <= K):
            raise DomainError(f"mode ({n},{j},{i}) not in basis")
        return self.offsets[n] + (j - 1) * K + (i - 1)

    def mode_slice(self, n: int, j: int) -> slice:
        start = self.index(n, j, 1)
        return slice(start, start + self.spec.k_max)

    def eigenfunction(self, n: int, j: int, i: int) -> DirichletEigenfunction:
        return DirichletEigenfunction(
            self.dim, n, j, i, float(self.alphas[n][i - 1]), float(self.norms[n][i - 1])
        )

    def radial_block(self, n: int, r):
        """c_{n,i} f_n(alpha_{n,i} r) for all i; shape (K, P)."""
        r = np.asarray(r, dtype=float)
        return self.norms[n][:, None] * self._radial_tables[n](np.outer(self.alphas[n], r))

    @cached_property
    def _radial_tables(self):
        return RadialTable.build_all(self.spec.n_max, self.dim, self.alpha_max)

    def overlaps(self, points, weights):
        """sum_p w_p e_k(x_p) for all modes k.

        ``weights`` of shape (P,) gives a vector of length ``size``; shape (P, S)
        gives an array (S, size). Points outside the closed unit ball contribute 0.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.asarray(weights, dtype=float)
        vector = w.ndim == 1
        W = w[:, None] if vector else w
        r = np.linalg.norm(pts, axis=-1)
        inside = r <= 1.0
        if not np.all(inside):
            pts, W, r = pts[inside], W[inside], r[inside]
        out = np.zeros((W.shape[1], self.size))
        if len(r):
            th = _directions(pts, r)
            psis = psi_all(self.spec.n_max, th, self.dim)
            K = self.spec.k_max
            for n, psi in enumerate(psis):
                Rt = self.radial_block(n, r).T  # (P, K)
                # blk[s, j, i] = sum_p W[p, s] psi[j, p] R[i, p]
                blk = np.stack([(W * psi[j][:, None]).T @ Rt for j in range(psi.shape[0])], axis=1)
                o = self.offsets[n]
                out[:, o : o + psi.shape[0] * K] = blk.reshape(W.shape[1], -1)
        return out[0] if vector else out

    def evaluate(self, points):
        """All basis functions at ``points``; shape (size, P)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts, axis=-1)
        th = _directions(pts, r)
        out = np.empty((self.size, len(r)))
        for n, psi in enumerate(psi_all(self.spec.n_max, th, self.dim)):
            blk = psi[:, None, :] * self.radial_block(n, r)[None, :, :]
            o = self.offsets[n]
            out[o : o + blk.shape[0] * blk.shape[1]] = blk.reshape(-1, len(r))
        out[:, r > 1.0] = 0.0
        return out

    def manifest_rows(self):
        t = self.table
        for k in range(self.size):
            yield (int(t["n"][k]), int(t["j"][k]), int(t["i"][k]), float(t["alpha"][k]),
                   float(t["lam"][k]), float(t["norm"][k]))

    def write_manifest(self, path, header_comment: str | None = None):
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow(["n", "j", "i", "alpha", "lambda", "norm_const"])
            for row in self.manifest_rows():
                w.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4]), repr(row[5])])


@lru_cache(maxsize=16)
def get_basis(spec: BasisSpec) -> Basis:
    return Basis(spec)


# ---------------------------------------------------------------------------
# boundary pairings


def default_nu_order(n: int, r: float, tol: float = 1e-14) -> int:
    """Sphere-rule order resolving degree-n times a harmonic function at radius r.

    Harmonic content of degree m at radius r is damped by r^m relative to the
    unit sphere, so degrees beyond log(tol)/log(r) are below ``tol``.
    """
    tail = int(math.ceil(math.log(tol) / math.log(max(r, 1e-3))))
    return n + max(tail, 16) + 8


def nu_pair(n: int, j: int, r: float, phi, d: int, order: int | None = None) -> float:
    """int psi_{n,j}(theta) phi(r theta) rho(d theta) over the unit sphere."""
    if not 0.0 < r < 1.0:
        raise DomainError(f"radius must lie in (0, 1), got {r}")
    rule = SphereRule.build(d, default_nu_order(n, r) if order is None else order)
    psi = eval_psi(n, j, rule.nodes, d)
    vals = np.asarray(phi(r * rule.nodes), dtype=float)
    return float(np.dot(rule.weights, psi * vals))


def check_constancy(n: int, j: int, phi, radii, d: int, order: int | None = None) -> float:
    """max |r^{-n} nu_r(phi) - mean| over the radius grid."""
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise DomainError("empty radius grid")
    vals = np.array([r ** (-n) * nu_pair(n, j, r, phi, d, order) for r in radii])
    return float(np.max(np.abs(vals - vals.mean())))
