"""Verification suites. Each suite module exposes ``NAME`` and ``run(ctx)``."""
from __future__ import annotations

from importlib import import_module

from .common import ConfigError, RunConfig, SuiteContext

SUITE_NAMES = (
    "bounds",
    "constancy",
    "covariance",
    "dmp",
    "gaussianity",
    "harmonic_measure",
    "radial",
    "scaling",
    "zero_boundary",
)


def check_suites(names) -> tuple:
    unknown = [n for n in names if n not in SUITE_NAMES]
    if unknown:
        raise ConfigError(f"unknown suite {', '.join(unknown)}; choose from {', '.join(SUITE_NAMES)}")
    return tuple(names)


def run_suite(name: str, config: RunConfig, dim: int) -> list:
    """Run one suite in one dimension; returns its Bonferroni-gated reports."""
    check_suites([name])
    module = import_module(f"{__name__}.{name}")
    ctx = SuiteContext(name, config, dim)
    module.run(ctx)
    return ctx.finish()


__all__ = ["SUITE_NAMES", "ConfigError", "RunConfig", "SuiteContext", "check_suites", "run_suite"]
