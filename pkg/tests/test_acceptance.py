"""Acceptance suite: one check per criterion, run against the real CLI.

Two full default ``gfflab verify`` runs are executed as subprocesses (the
second only to check byte-identical output). Every criterion is evaluated
literally from ``report.json`` and the per-suite timings printed by the CLI:
statistical rows must satisfy |z| <= 3 here even though the suites gate at a
family-wise corrected threshold. Each test prints one ``criterion NN`` line;
``conftest.py`` repeats them as a summary block at the end of the session.

Run standalone with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import json
import math
import os
import re
import subprocess
import sys
import time

import pytest

from gfflab.basis_checks import run_basis_checks
from gfflab.harmonics import default_spec

Z_MAX = 3.0
WALL_LIMIT = 600.0
LINE = re.compile(r"^(pass|fail)\s+(\S+)\s+d=(\d)\s+(\d+)/(\d+)\s+\(([\d.]+) s\)$")

CRITERIA = {
    1: "spherical-average variance d=2 vs log 2 at 1e5 replicas, radial suite < 60 s",
    2: "spherical-average variance d=3 vs double-sphere oracle, sign convention reported",
    3: "covariance = Green's function, 5-pair mollifier battery",
    4: "scaling: kernel identity < 1e-10 and variance ratio vs r^(2+d)",
    5: "Wick four-point identity in d=2 and d=3",
    6: "constancy: max deviation < 1e-8 for n <= 4, suite < 30 s",
    7: "basis integrity: Gram, eigen-equation and Bessel-zero residuals",
    8: "domain Markov: h_sub vs G^inner, harmonicity, decorrelation, nested ln 2",
    9: "zero boundary: monotone Var h_r(0), annular K2 decreasing for n = 2..6",
    10: "radial process: increment decorrelation and fourth-moment slope in [1.8, 2.2]",
    11: "walk-on-spheres bins vs Poisson kernel at 1e5 walks",
    12: "full default verify: byte-identical rerun, wall time < 10 min",
}


def _run_verify(out):
    env = dict(os.environ, GFFLAB_WORKERS=os.environ.get("GFFLAB_WORKERS", "1"))
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "gfflab", "verify", "--out", str(out)],
                          capture_output=True, text=True, env=env)
    wall = time.perf_counter() - start
    timings = {}
    for line in proc.stdout.splitlines():
        m = LINE.match(line.strip())
        if m:
            timings[(m.group(2), int(m.group(3)))] = float(m.group(6))
    return {"returncode": proc.returncode, "stdout": proc.stdout, "stderr": proc.stderr, "wall": wall,
            "timings": timings, "json": (out / "report.json").read_bytes() if (out / "report.json").exists()
            else b""}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    first = _run_verify(base / "run1")
    second = _run_verify(base / "run2")
    return first, second


@pytest.fixture(scope="module")
def report(runs):
    first = runs[0]
    assert first["json"], f"verify produced no report:\n{first['stderr'][-2000:]}"
    return json.loads(first["json"])


def rows(doc, suite, dim, prefix):
    return [r for r in doc["reports"] if r["suite"] == suite and r["dim"] == dim and r["test"].startswith(prefix)]


def z_ok(r):
    return r["z"] is not None and not isinstance(r["z"], str) and abs(r["z"]) <= Z_MAX


def residual_ok(r, tol):
    return r["residual"] is not None and not isinstance(r["residual"], str) and r["residual"] < tol


DETAILS: dict = {}


def record(number, ok, detail):
    DETAILS.setdefault(number, []).append(detail)
    print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {CRITERIA[number]} | {detail}")


def _check(number, checks):
    """``checks`` is a list of (label, ok, info); all must hold."""
    failed = [f"{label} ({info})" for label, ok, info in checks if not ok]
    detail = "; ".join(f"{label}: {info}" for label, _, info in checks) if not failed else \
        "failed: " + "; ".join(failed)
    record(number, not failed, detail)
    assert not failed, detail


def _one(found, what):
    assert len(found) == 1, f"expected one row for {what}, found {len(found)}"
    return found[0]


def _fmt_z(r):
    return f"z={r['z']:+.2f}" if isinstance(r["z"], float) else f"z={r['z']}"


def test_criterion_01_variance_d2(report, runs):
    r = _one(rows(report, "radial", 2, "spectral Var h_0.5(0)"), "d=2 spectral variance")
    secs = runs[0]["timings"].get(("radial", 2), math.inf)
    _check(1, [
        ("reference is log 2", abs(r["reference"] - math.log(2)) < 1e-4, f"ref={r['reference']:.6f}"),
        ("|z| <= 3", z_ok(r), f"est={r['estimate']:.5f} se={r['stderr']:.5f} {_fmt_z(r)}"),
        ("replicas >= 1e5", r["replicas"] >= 100_000, f"replicas={r['replicas']}"),
        ("radial d=2 < 60 s", secs < 60.0, f"{secs:.1f} s"),
    ])


def test_criterion_02_variance_d3(report):
    r = _one(rows(report, "radial", 3, "spectral Var h_0.5(0)"), "d=3 spectral variance")
    o = _one(rows(report, "radial", 3, "Var h_0.5(0): double-sphere oracle"), "d=3 oracle row")
    _check(2, [
        ("MC vs oracle |z| <= 3", z_ok(r) and abs(r["reference"] - o["estimate"]) < 1e-6 * abs(o["estimate"]),
         f"est={r['estimate']:.5f} ref={r['reference']:.6f} {_fmt_z(r)}"),
        ("oracle vs r^(2-d) - 1 < 1e-6", residual_ok(o, 1e-6), f"residual={o['residual']:.2e}"),
        ("sign convention stated", "negative" in o["note"], o["note"]),
    ])


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_03_covariance_battery(report, dim):
    found = rows(report, "covariance", dim, "Cov(eta_x")
    zs = [r["z"] for r in found]
    _check(3, [
        ("five pairs", len(found) == 5, f"d={dim} pairs={len(found)}"),
        ("all |z| <= 3", all(z_ok(r) for r in found), "z=" + ", ".join(f"{z:+.2f}" for z in zs)),
        ("replicas >= 1e5", all(r["replicas"] >= 100_000 for r in found), f"d={dim}"),
    ])


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_04_scaling(report, dim):
    ident = rows(report, "scaling", dim, "kernel identity")
    ratio = _one(rows(report, "scaling", dim, "Var ratio small/unit"), "variance ratio")
    worst = max(r["residual"] for r in ident)
    _check(4, [
        ("kernel identities < 1e-10", len(ident) >= 2 and all(residual_ok(r, 1e-10) for r in ident),
         f"d={dim} max residual={worst:.1e}"),
        ("ratio vs r^(2+d) |z| <= 3", z_ok(ratio) and abs(ratio["reference"] - 0.5 ** (2 + dim)) < 1e-15,
         f"ratio={ratio['estimate']:.5f} ref={ratio['reference']:.5f} {_fmt_z(ratio)}"),
    ])


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_05_wick(report, dim):
    r = _one(rows(report, "gaussianity", dim, "E prod (h, eta_zi)"), "Wick four-point row")
    o = _one(rows(report, "gaussianity", dim, "mollified Wick sum"), "Wick oracle row")
    _check(5, [
        ("four-point |z| <= 3", z_ok(r), f"d={dim} est={r['estimate']:.5f} ref={r['reference']:.5f} {_fmt_z(r)}"),
        ("smoothed g oracle consistent", o["verdict"] == "pass", f"residual={o['residual']:.1e}"),
    ])


def test_criterion_06_constancy(report, runs):
    found = [r for r in report["reports"] if r["suite"] == "constancy"]
    top = [r for r in found if r["test"].startswith("max deviation over all")]
    worst = max(r["residual"] for r in found)
    secs = [runs[0]["timings"].get(("constancy", d), math.inf) for d in (2, 3)]
    same = runs[0]["json"] == runs[1]["json"]
    _check(6, [
        ("max deviation < 1e-8", len(top) == 2 and all(residual_ok(r, 1e-8) for r in found),
         f"worst residual={worst:.1e} over {len(found)} rows"),
        ("deterministic rows only", all(r["kind"] == "deterministic" for r in found), "kinds checked"),
        ("each dimension < 30 s", all(s < 30.0 for s in secs), f"d=2 {secs[0]:.1f} s, d=3 {secs[1]:.1f} s"),
        ("identical on rerun", same, "report.json compared"),
    ])


LIMITS = {"psi Gram": 1e-10, "eigenfunction Gram": 1e-8, "eigen-equation": 1e-3, "radial zero": 1e-12}


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_07_basis_integrity(dim):
    checks = run_basis_checks(default_spec(dim))
    out = []
    for prefix, limit in LIMITS.items():
        c = [c for c in checks if c.name.startswith(prefix)]
        out.append((prefix, len(c) == 1 and c[0].residual < limit,
                    f"d={dim} {c[0].residual:.1e} < {limit:g}" if c else "missing"))
    _check(7, out)


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_08_domain_markov(report, dim):
    sub = rows(report, "dmp", dim, "Cov(h_sub) vs K2^inner")
    harm = rows(report, "dmp", dim, "phi mean-value residual")
    dec = rows(report, "dmp", dim, "Cov(phi")
    checks = [
        ("h_sub vs G^inner (>= 5 tests, |z| <= 3)", len(sub) >= 5 and all(z_ok(r) for r in sub),
         f"d={dim} n={len(sub)} max|z|={max((abs(r['z']) for r in sub), default=math.nan):.2f}"),
        ("phi/bulk decorrelation |z| <= 3", len(dec) >= 1 and all(z_ok(r) for r in dec),
         f"n={len(dec)} max|z|={max((abs(r['z']) for r in dec), default=math.nan):.2f}"),
        ("harmonicity residuals", len(harm) >= 1 and all(r["verdict"] == "pass" for r in harm),
         f"n={len(harm)} max={max((r['residual'] for r in harm), default=math.nan):.1e}"),
    ]
    if dim == 2:
        nest = _one(rows(report, "dmp", 2, "Var[phi_0.5B(0) - phi_B(0)]"), "nested increment")
        checks.append(("nested increment = ln 2", z_ok(nest) and abs(nest["reference"] - math.log(2)) < 1e-12,
                       f"est={nest['estimate']:.5f} {_fmt_z(nest)}"))
    _check(8, checks)


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_09_zero_boundary(report, dim):
    mono = _one(rows(report, "zero_boundary", dim, "analytic Var h_r(0) strictly decreasing"), "monotone decay")
    ann = _one(rows(report, "zero_boundary", dim, "K2(f_n, f_n) strictly decreasing for n = 2..6"), "annuli")
    _check(9, [
        ("Var h_r(0) decreasing", mono["verdict"] == "pass", f"d={dim} residual={mono['residual']}"),
        ("K2(f_n, f_n) decreasing n = 2..6", ann["verdict"] == "pass", f"residual={ann['residual']}"),
    ])


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_10_radial_process(report, dim):
    inc = rows(report, "radial", dim, "Cov of h_r(0) increments")
    slope = _one(rows(report, "radial", dim, "log-log slope of E X_delta^4"), "slope")
    _check(10, [
        ("4 increment pairs |z| <= 3", len(inc) == 4 and all(z_ok(r) for r in inc),
         f"d={dim} z=" + ", ".join(f"{r['z']:+.2f}" for r in inc)),
        ("slope in [1.8, 2.2]", 1.8 <= slope["estimate"] <= 2.2, f"slope={slope['estimate']:.4f}"),
    ])


@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_11_walk_on_spheres(report, dim):
    bins = rows(report, "harmonic_measure", dim, "bin ")
    _check(11, [
        ("every bin |z| <= 3", len(bins) >= 2 and all(z_ok(r) for r in bins),
         f"d={dim} bins={len(bins)} max|z|={max((abs(r['z']) for r in bins), default=math.nan):.2f}"),
        ("1e5 walks", all(r["replicas"] >= 100_000 for r in bins), f"walks={bins[0]['replicas'] if bins else 0}"),
    ])


def test_criterion_12_full_run(runs, report):
    first, second = runs
    _check(12, [
        ("exit code 0 and overall pass", first["returncode"] == 0 and report["verdict"] == "pass",
         f"exit={first['returncode']} verdict={report['verdict']}"),
        ("byte-identical report.json", first["json"] == second["json"] and first["json"] != b"",
         f"{len(first['json'])} bytes"),
        ("wall time < 600 s", first["wall"] < WALL_LIMIT, f"{first['wall']:.0f} s (rerun {second['wall']:.0f} s)"),
    ])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
