"""Run configuration and the per-suite context shared by all verification suites."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..harmonics import DEFAULT_TRUNCATION, BasisSpec
from ..sampler import ensemble_values, exact_spherical_averages
from ..stats import (
    StatReport,
    apply_bonferroni,
    covariance_estimate,
    derive_seed,
    det_report,
    pvalue_report,
    stat_report,
)

DEFAULT_SEED = 20240917
DEFAULT_REPLICAS = 100_000

# n = 0 functionals (spherical averages about the center) converge like 1/K_max
RADIAL_K = 3000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dims: tuple = (2, 3)
    truncation: tuple | None = None
    replicas: int = DEFAULT_REPLICAS
    seed: int = DEFAULT_SEED
    suites: tuple = ()
    tolerances: tuple = ()
    out: str = "gff-report"

    def __post_init__(self):
        if not self.dims or any(d not in (2, 3) for d in self.dims):
            raise ConfigError(f"unsupported dimension in {self.dims}; choose from 2, 3")
        if self.replicas <= 0:
            raise ConfigError("replicas must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.truncation is not None:
            n, k = self.truncation
            if n < 0 or k < 1:
                raise ConfigError("truncation needs n_max >= 0 and k_max >= 1")
        for key, val in self.tolerances:
            if not (isinstance(val, float) and math.isfinite(val) and val > 0):
                raise ConfigError(f"tolerance {key} must be a positive number")

    def spec(self, dim: int) -> BasisSpec:
        n, k = self.truncation if self.truncation is not None else DEFAULT_TRUNCATION[dim]
        return BasisSpec(dim, n, k)

    def tolerance(self, key: str, default: float) -> float:
        return dict(self.tolerances).get(key, default)

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "truncation": None if self.truncation is None else list(self.truncation),
            "replicas": self.replicas,
            "seed": self.seed,
            "suites": list(self.suites),
            "tolerances": {k: v for k, v in sorted(self.tolerances)},
        }


def trunc(spec: BasisSpec) -> tuple:
    return (spec.n_max, spec.k_max)


def suite_spec(config: RunConfig, dim: int, default: dict) -> BasisSpec:
    """The configured truncation if one is set, else the suite's own default."""
    if config.truncation is not None:
        return config.spec(dim)
    return BasisSpec(dim, *default[dim])


@dataclass
class SuiteContext:
    """Collects the reports of one suite in one dimension."""

    name: str
    config: RunConfig
    dim: int
    reports: list = field(default_factory=list)

    @property
    def seed(self) -> int:
        return derive_seed(self.config.seed, self.name, self.dim)

    def test_seed(self, test: str) -> int:
        return derive_seed(self.seed, test)

    @property
    def replicas(self) -> int:
        return self.config.replicas

    @property
    def spec(self) -> BasisSpec:
        return self.config.spec(self.dim)

    def tol(self, key: str, default: float) -> float:
        return self.config.tolerance(key, default)

    def stat(self, test, anchor, estimate, stderr, reference, *, seed, truncation, replicas=None,
             note="") -> StatReport:
        r = stat_report(self.name, test, anchor, estimate, stderr, reference, seed=seed,
                        truncation=truncation, replicas=self.replicas if replicas is None else replicas,
                        dim=self.dim, note=note)
        self.reports.append(r)
        return r

    def cov_test(self, test, anchor, x, y, reference, *, seed, truncation, note="") -> StatReport:
        est, se = covariance_estimate(x, y)
        return self.stat(test, anchor, est, se, reference, seed=seed, truncation=truncation,
                         replicas=len(x), note=note)

    def det(self, test, anchor, estimate, reference, residual, tolerance, *, truncation=(0, 0),
            note="", kind="deterministic", seed=0) -> StatReport:
        r = det_report(self.name, test, anchor, estimate, reference, residual, tolerance, seed=seed,
                       truncation=truncation, dim=self.dim, note=note, kind=kind)
        self.reports.append(r)
        return r

    def pvalue(self, test, anchor, p, *, seed, truncation, replicas=None, note="") -> StatReport:
        r = pvalue_report(self.name, test, anchor, p, seed=seed, truncation=truncation,
                          replicas=self.replicas if replicas is None else replicas, dim=self.dim,
                          note=note)
        self.reports.append(r)
        return r

    def ensemble(self, model, rows, test: str, replicas=None):
        """Values of ``rows`` over this suite's replicas; returns (values, seed)."""
        seed = self.test_seed(test)
        n = self.replicas if replicas is None else replicas
        return ensemble_values(model, rows, seed, n), seed

    def ensemble_exact(self, radii, test: str = "exact-averages", replicas=None):
        """Exact-law samples of (h_r(0))_r over this suite's replicas; returns (values, seed)."""
        seed = self.test_seed(test)
        n = self.replicas if replicas is None else replicas
        return exact_spherical_averages(np.asarray(radii, dtype=float), self.dim, seed, n), seed

    def finish(self) -> list:
        return apply_bonferroni(self.reports)


def rel(a, b) -> float:
    return float(abs(a - b) / max(abs(b), 1e-300))


def decrease_residual(values) -> float:
    """0 if ``values`` is strictly decreasing, else the largest non-negative step (ties count)."""
    steps = np.diff(np.asarray(values, dtype=float))
    if np.all(steps < 0):
        return 0.0
    return float(max(steps.max(), np.finfo(float).tiny))


def unit_vec(d: int, *coords) -> np.ndarray:
    v = np.zeros(d)
    v[: len(coords)] = coords
    return v


def fmt_point(z) -> str:
    """(0.3, 0) style label of a point."""
    return "(" + ", ".join(f"{float(c):g}" for c in np.ravel(z)) + ")"
