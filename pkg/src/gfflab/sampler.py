"""Truncated Karhunen-Loeve sampling of the zero-boundary GFF on a ball.

A field on ``ball`` is h = sum_k sigma_k xi_k e_k with e_k the Dirichlet
eigenfunctions of the ball, xi_k iid standard normal and
sigma_k^2 = kappa_d R^2 / lambda_k, so that Cov((h, f), (h, g)) converges to
the double integral of f G g as the truncation grows.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Ball, DomainError, scaling_s
from .harmonics import Basis, BasisSpec, default_spec, get_basis, multiplicity
from .pairing import spectral_weights
from .stats import covariance_estimate, replica_rng, standard_normals  # noqa: F401  (re-exported)
from .testfunctions import TestFunction

BLOCK = 1024


@dataclass(frozen=True)
class FieldModel:
    """Basis and per-mode standard deviations for the field on ``ball``."""

    spec: BasisSpec
    ball: Ball

    @property
    def basis(self) -> Basis:
        return get_basis(self.spec)

    @property
    def sigma(self) -> np.ndarray:
        return _sigma(self.spec, self.ball)

    @property
    def size(self) -> int:
        return self.basis.size

    def functional(self, f: TestFunction) -> np.ndarray:
        """Row vector r with (h, f) = r . xi."""
        return self.sigma * f.overlaps(self.basis, self.ball)

    def nu_row(self, n: int, j: int, r: float) -> np.ndarray:
        """Row vector of (h, nu_r^{psi_{n,j}}), the psi-weighted average over the radius-r sphere."""
        if not 0.0 < r < 1.0:
            raise DomainError(f"r must lie in (0, 1), got {r}")
        b = self.basis
        row = np.zeros(b.size)
        sl = b.mode_slice(n, j)
        scale = self.ball.radius ** (-self.ball.dim / 2.0)
        row[sl] = self.sigma[sl] * scale * b.radial_block(n, np.array([r]))[:, 0]
        return row


@lru_cache(maxsize=32)
def _sigma(spec, ball):
    s = np.sqrt(spectral_weights(get_basis(spec), ball))
    s.setflags(write=False)
    return s


def field_model(spec: BasisSpec | None = None, ball: Ball | None = None, dim: int = 2) -> FieldModel:
    if ball is None:
        ball = Ball.unit(spec.dim if spec is not None else dim)
    spec = spec or default_spec(ball.dim)
    if spec.dim != ball.dim:
        raise DomainError("basis and ball dimensions differ")
    return FieldModel(spec, ball)


@dataclass(frozen=True)
class FieldSample:
    """One truncated realization; immutable once drawn."""

    spec: BasisSpec
    xi: np.ndarray = field(repr=False)
    seed: int = 0
    replica: int = 0
    ball: Ball | None = None

    def __post_init__(self):
        ball = self.ball or Ball.unit(self.spec.dim)
        object.__setattr__(self, "ball", ball)
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (self.spec.mode_count,) or not np.all(np.isfinite(xi)):
            raise DomainError("coefficient vector does not match the basis")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def model(self) -> FieldModel:
        return FieldModel(self.spec, self.ball)


def sample_field(spec: BasisSpec, seed: int, replica: int, ball: Ball | None = None) -> FieldSample:
    """Draw xi for one replica from the (seed, replica) stream."""
    xi = replica_rng(seed, replica).standard_normal(spec.mode_count)
    return FieldSample(spec, xi, int(seed), int(replica), ball)


def pair(h: FieldSample, f: TestFunction) -> float:
    return float(h.model.functional(f) @ h.xi)


def pair_nu(h: FieldSample, n: int, j: int, r: float) -> float:
    return float(h.model.nu_row(n, j, r) @ h.xi)


# ---------------------------------------------------------------------------
# ensembles


def ensemble_values(model: FieldModel, rows, seed: int, replicas: int, start: int = 0,
                    block: int = BLOCK) -> np.ndarray:
    """Values of linear functionals ``rows`` (S, size) on replicas start..start+replicas-1.

    Streams the coefficients block by block; row k of the result equals what
    ``sample_field(spec, seed, start + k)`` gives for each functional. Each
    replica's normals are a sequential stream, so only the prefix up to the
    last mode the rows touch is drawn.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != model.size:
        raise DomainError("functional rows do not match the basis size")
    used = np.nonzero(np.any(rows != 0.0, axis=0))[0]
    prefix = int(used[-1]) + 1 if len(used) else 1
    out = np.empty((replicas, rows.shape[0]))
    rt = np.ascontiguousarray(rows[:, :prefix].T)
    for lo in range(0, replicas, block):
        hi = min(lo + block, replicas)
        xi = standard_normals(seed, start + lo, start + hi, prefix)
        out[lo:hi] = xi @ rt
    return out


# ---------------------------------------------------------------------------
# radial processes


@dataclass(frozen=True)
class RadialPath:
    radii: np.ndarray
    values: np.ndarray
    kind: str = "spherical-average"
    coeffs: tuple = ()

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        _check_grid(radii)
        if values.shape[-1] != len(radii):
            raise DomainError("values and radii lengths differ")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)


def _check_grid(radii):
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) == 0:
        raise DomainError("radius grid must be a non-empty 1-d array")
    if np.any(np.diff(radii) <= 0):
        raise DomainError("radius grid must be strictly increasing")
    if radii[0] <= 0 or radii[-1] >= 1:
        raise DomainError("radii must lie in (0, 1)")
    return radii


def spherical_average_covariance(radii, d: int) -> np.ndarray:
    """c(r, u) = s(max(r, u)) - s(1) for the unit-ball field centred at 0."""
    radii = _check_grid(radii)
    return scaling_s(np.maximum.outer(radii, radii), d) - scaling_s(1.0, d)


def exact_spherical_averages(radii, d: int, seed: int, replicas: int, start: int = 0) -> np.ndarray:
    """Cholesky samples of (h_r(0))_r, shape (replicas, len(radii)); one stream per replica."""
    cov = spherical_average_covariance(radii, d)
    L = np.linalg.cholesky(cov)
    z = standard_normals(seed, start, start + replicas, len(cov))
    return z @ L.T


def spherical_average_rows(model: FieldModel, radii) -> np.ndarray:
    return np.stack([model.nu_row(0, 1, r) for r in _check_grid(radii)])


def spherical_average_path(radii, source="spectral", *, field: FieldSample | None = None,
                           seed: int = 0, replica: int = 0, dim: int = 2) -> RadialPath:
    """h_r(0) on a radius grid from a spectral sample or from the exact Gaussian law."""
    radii = _check_grid(radii)
    if source == "spectral":
        if field is None:
            raise ValueError("the spectral source needs a field sample")
        vals = spherical_average_rows(field.model, radii) @ field.xi
    elif source == "exact":
        vals = exact_spherical_averages(radii, dim, seed, 1, start=replica)[0]
    else:
        raise ValueError(f"unknown source {source!r}")
    return RadialPath(radii, vals)


def a_process_rows(model: FieldModel, coeffs, radii) -> np.ndarray:
    """Rows of A_r = sum_i a_i r^{-n_i} (h, nu_r^{psi_{n_i, j_i}})."""
    radii = _check_grid(radii)
    coeffs = list(coeffs)
    if not coeffs:
        raise ValueError("empty coefficient list")
    for _, n, j in coeffs:
        if not (0 <= n <= model.spec.n_max and 1 <= j <= multiplicity(n, model.spec.dim)):
            raise DomainError(f"harmonic ({n},{j}) not in basis")
    return np.stack([sum(a * r ** (-n) * model.nu_row(n, j, r) for a, n, j in coeffs) for r in radii])


def a_process(h: FieldSample, coeffs, radii) -> RadialPath:
    rows = a_process_rows(h.model, coeffs, radii)
    return RadialPath(radii, rows @ h.xi, "a-process", tuple(tuple(c) for c in coeffs))


# ---------------------------------------------------------------------------
# archives


def write_archive(path, samples) -> None:
    """CSV (replica, n, j, i, xi); the header comment records basis and ball."""
    samples = list(samples)
    if not samples:
        raise ValueError("nothing to write")
    spec, ball = samples[0].spec, samples[0].ball
    table = get_basis(spec).table
    with open(path, "w", newline="") as fh:
        fh.write(f"# dim={spec.dim} n_max={spec.n_max} k_max={spec.k_max} seed={samples[0].seed} "
                 f"center={','.join(repr(c) for c in ball.center)} radius={ball.radius!r}\n")
        w = csv.writer(fh)
        w.writerow(["replica", "n", "j", "i", "xi"])
        for s in samples:
            if s.spec != spec or s.ball != ball:
                raise ValueError("archive samples must share basis and ball")
            for k in range(spec.mode_count):
                w.writerow([s.replica, int(table["n"][k]), int(table["j"][k]), int(table["i"][k]),
                            repr(float(s.xi[k]))])


def read_archive(path) -> list[FieldSample]:
    with open(path, newline="") as fh:
        meta = dict(tok.split("=", 1) for tok in fh.readline().lstrip("# ").split())
        rows = list(csv.DictReader(fh))
    spec = BasisSpec(int(meta["dim"]), int(meta["n_max"]), int(meta["k_max"]))
    ball = Ball(spec.dim, tuple(float(c) for c in meta["center"].split(",")), float(meta["radius"]))
    basis = get_basis(spec)
    by_rep: dict[int, np.ndarray] = {}
    for row in rows:
        rep = int(row["replica"])
        xi = by_rep.setdefault(rep, np.full(spec.mode_count, np.nan))
        xi[basis.index(int(row["n"]), int(row["j"]), int(row["i"]))] = float(row["xi"])
    return [FieldSample(spec, xi, int(meta["seed"]), rep, ball) for rep, xi in sorted(by_rep.items())]
