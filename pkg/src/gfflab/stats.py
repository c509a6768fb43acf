"""Seeding, estimators with standard errors, and gated test reports."""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

Z_GATE = 3.0
FAMILY_ERROR = 0.01


class InsufficientData(ValueError):
    pass


# ---------------------------------------------------------------------------
# seeds


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Generator for one replica; depends only on (seed, replica), never on evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replica),)))


def derive_seed(master: int, *names) -> int:
    """A 63-bit child seed of ``master`` keyed by names (strings or integers)."""
    key = tuple(zlib.crc32(str(n).encode()) for n in names)
    state = np.random.SeedSequence(int(master), spawn_key=key).generate_state(2, np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


def standard_normals(seed: int, start: int, stop: int, size: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the replica-indexed normal array, shape (stop-start, size)."""
    out = np.empty((stop - start, size))
    for k, r in enumerate(range(start, stop)):
        out[k] = replica_rng(seed, r).standard_normal(size)
    return out


# ---------------------------------------------------------------------------
# estimators


def mean_estimate(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        raise InsufficientData("need at least 2 observations")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def covariance_estimate(x, y=None):
    """Unbiased sample covariance and its leave-one-out jackknife standard error."""
    x = np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    n = len(x)
    if n < 2 or len(y) != n:
        raise InsufficientData("need at least 2 paired observations")
    zi = (x - x.mean()) * (y - y.mean())
    S = zi.sum()
    est = S / (n - 1)
    if n < 3:
        return float(est), float("nan")
    # leave-one-out covariances in closed form
    loo = (S - n * zi / (n - 1)) / (n - 2)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(est), float(se)


def jackknife(statistic, *columns, groups: int = 100):
    """Grouped delete-one jackknife of ``statistic(*columns)``; contiguous groups, deterministic."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    n = len(cols[0])
    if n < 2 * groups:
        groups = max(2, n // 2)
    if n < 4:
        raise InsufficientData("need at least 4 observations")
    full = float(statistic(*cols))
    edges = np.linspace(0, n, groups + 1).astype(int)
    reps = np.empty(groups)
    for g in range(groups):
        mask = np.ones(n, dtype=bool)
        mask[edges[g] : edges[g + 1]] = False
        reps[g] = statistic(*(c[mask] for c in cols))
    se = math.sqrt((groups - 1) / groups * np.sum((reps - reps.mean()) ** 2))
    return full, float(se)


def kurtosis_ratio(x):
    """E[X^4] / (3 E[X^2]^2) for a centred variable (mean known to be 0)."""
    x2 = np.asarray(x, dtype=float) ** 2
    return float(np.mean(x2 * x2) / (3.0 * np.mean(x2) ** 2))


def normality_pvalue(x) -> float:
    """Kolmogorov-Smirnov p-value against N(0, s^2).

    The scale is estimated from an independent half of the data so that the
    KS null distribution stays exact on the other half.
    """
    x = np.asarray(x, dtype=float)
    half = len(x) // 2
    sd = math.sqrt(np.mean(x[:half] ** 2))
    return float(sps.kstest(x[half:] / sd, "norm").pvalue)


def bonferroni_gate(k: int, family: float = FAMILY_ERROR) -> float:
    """|z| threshold for k two-sided tests with family-wise error ``family``, never below 3."""
    if k <= 0:
        return Z_GATE
    return max(Z_GATE, float(sps.norm.isf(family / (2 * k))))


# ---------------------------------------------------------------------------
# reports


@dataclass
class StatReport:
    suite: str
    test: str
    anchor: str
    estimate: float
    stderr: float | None
    reference: float
    z: float | None
    residual: float | None
    verdict: str
    seed: int
    truncation: tuple
    replicas: int
    dim: int = 2
    kind: str = "statistical"
    gate: float = Z_GATE
    note: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["truncation"] = list(self.truncation)
        for k in ("estimate", "stderr", "reference", "z", "residual", "gate"):
            v = out[k]
            if v is not None:
                v = float(v)
                out[k] = v if math.isfinite(v) else str(v)
        return out

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def stat_report(suite, test, anchor, estimate, stderr, reference, *, seed, truncation,
                replicas, dim, gate=Z_GATE, note="") -> StatReport:
    z = (estimate - reference) / stderr if stderr > 0 else (0.0 if estimate == reference else math.inf)
    verdict = "pass" if abs(z) <= gate else "fail"
    return StatReport(suite, test, anchor, estimate, stderr, reference, z, None, verdict, seed,
                      tuple(truncation), replicas, dim, "statistical", gate, note)


def det_report(suite, test, anchor, estimate, reference, residual, tolerance, *, seed=0,
               truncation=(0, 0), dim=2, note="", kind="deterministic") -> StatReport:
    ok = bool(np.isfinite(residual) and residual <= tolerance)
    return StatReport(suite, test, anchor, estimate, None, reference, None, residual,
                      "pass" if ok else "fail", seed, tuple(truncation), 0, dim, kind, tolerance, note)


def pvalue_report(suite, test, anchor, pvalue, *, seed, truncation, replicas, dim,
                  level=FAMILY_ERROR, note="") -> StatReport:
    """Goodness-of-fit gate: pass iff p >= level (level is re-set by ``apply_bonferroni``)."""
    return StatReport(suite, test, anchor, pvalue, None, level, None, None,
                      "pass" if pvalue >= level else "fail", seed, tuple(truncation), replicas,
                      dim, "pvalue", level, note)


def apply_bonferroni(reports):
    """Re-gate one suite's statistical and p-value reports at family-wise corrected thresholds."""
    stat = [r for r in reports if r.kind == "statistical"]
    gate = bonferroni_gate(len(stat))
    for r in stat:
        r.gate = gate
        r.verdict = "pass" if r.z is not None and abs(r.z) <= gate else "fail"
    pv = [r for r in reports if r.kind == "pvalue"]
    for r in pv:
        r.gate = r.reference = FAMILY_ERROR / len(pv)
        r.verdict = "pass" if r.estimate >= r.gate else "fail"
    return reports
