import math

import numpy as np
import pytest
from scipy import stats as sps

from gfflab.stats import (
    InsufficientData,
    apply_bonferroni,
    bonferroni_gate,
    covariance_estimate,
    derive_seed,
    det_report,
    jackknife,
    kurtosis_ratio,
    mean_estimate,
    normality_pvalue,
    pvalue_report,
    replica_rng,
    standard_normals,
    stat_report,
)


def test_replica_streams_are_order_free():
    a = standard_normals(7, 3, 6, 4)
    assert np.array_equal(a[1], replica_rng(7, 4).standard_normal(4))
    assert np.array_equal(standard_normals(7, 0, 6, 4)[3:], a)
    assert not np.array_equal(replica_rng(7, 0).standard_normal(3), replica_rng(8, 0).standard_normal(3))


def test_derive_seed():
    assert derive_seed(1, "radial", 2) == derive_seed(1, "radial", 2)
    assert len({derive_seed(1, "a"), derive_seed(1, "b"), derive_seed(2, "a")}) == 3
    assert 0 <= derive_seed(2**64 - 1, "x") < 2**63


def test_covariance_jackknife_matches_brute_force():
    rng = np.random.default_rng(0)
    x = rng.normal(size=40)
    y = 0.5 * x + rng.normal(size=40)
    est, se = covariance_estimate(x, y)
    assert est == pytest.approx(np.cov(x, y)[0, 1])
    loo = np.array([np.cov(np.delete(x, i), np.delete(y, i))[0, 1] for i in range(40)])
    ref = math.sqrt(39 / 40 * np.sum((loo - loo.mean()) ** 2))
    assert se == pytest.approx(ref, rel=1e-10)
    with pytest.raises(InsufficientData):
        covariance_estimate([1.0])


def test_grouped_jackknife_of_mean_is_group_standard_error():
    # for the mean, the grouped jackknife is the standard error of the group means
    x = np.random.default_rng(1).normal(size=1000)
    est, se = jackknife(np.mean, x, groups=50)
    assert est == pytest.approx(x.mean())
    means = x.reshape(50, 20).mean(axis=1)
    assert se == pytest.approx(means.std(ddof=1) / math.sqrt(50), rel=1e-10)
    # too many groups are capped at two observations each
    assert jackknife(np.mean, x, groups=1000)[1] == pytest.approx(
        x.reshape(500, 2).mean(axis=1).std(ddof=1) / math.sqrt(500), rel=1e-10)
    m, s = mean_estimate(x)
    assert (m, s) == pytest.approx((x.mean(), x.std(ddof=1) / math.sqrt(1000)))


def test_kurtosis_and_normality_on_gaussian_data():
    x = np.random.default_rng(2).normal(scale=3.0, size=200_000)
    assert kurtosis_ratio(x) == pytest.approx(1.0, abs=0.02)
    assert normality_pvalue(x) > 1e-3
    assert normality_pvalue(np.random.default_rng(3).uniform(-1, 1, 20_000)) < 1e-6


def test_bonferroni_gate():
    assert bonferroni_gate(0) == 3.0
    assert bonferroni_gate(1) == 3.0
    assert bonferroni_gate(100) == pytest.approx(sps.norm.isf(0.01 / 200))


def test_reports_and_regating():
    common = dict(seed=1, truncation=(2, 3), replicas=100, dim=2)
    r = [stat_report("s", f"t{i}", "a", 0.1 * i, 0.1, 0.0, **common) for i in range(5)]
    r.append(pvalue_report("s", "p", "a", 0.004, **common))
    r.append(det_report("s", "d", "a", 1.0, 1.0, 1e-9, 1e-8))
    apply_bonferroni(r)
    assert [x.verdict for x in r[:5]] == ["pass"] * 4 + ["fail"]
    assert r[0].gate == pytest.approx(sps.norm.isf(0.001))
    assert r[5].gate == 0.01 and r[5].verdict == "fail"
    assert r[6].passed and r[6].to_dict()["stderr"] is None
    inf = stat_report("s", "t", "a", 1.0, 0.0, 0.0, **common)
    assert inf.to_dict()["z"] == "inf" and not inf.passed
