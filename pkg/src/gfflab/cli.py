"""Command-line front end: ``gfflab basis | verify | plotdata``.

Exit codes: 0 all checks pass, 1 usage or configuration error (or I/O failure),
2 verification failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .basis_checks import run_basis_checks
from .geometry import green_unit_ball, scaling_s
from .harmonics import BasisSpec, get_basis, multiplicity
from .sampler import ensemble_values, field_model, spherical_average_rows
from .stats import StatReport, derive_seed
from .suites import SUITE_NAMES, ConfigError, RunConfig, check_suites, run_suite
from .suites.common import DEFAULT_REPLICAS, DEFAULT_SEED, RADIAL_K

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2
RUN_KEYS = ("dim", "seed", "replicas", "truncation", "suites", "out")
CSV_FIELDS = ("suite", "dim", "test", "anchor", "estimate", "stderr", "reference", "z", "residual", "verdict",
              "gate", "kind", "seed", "truncation", "replicas", "note")

TOLERANCE_KEYS = (
    "annulus_rel", "bound_stability", "constancy", "dirichlet", "e_gram", "eigen_residual", "harmonicity",
    "linearity", "nu_truncation", "oracle_rel", "psi_gram", "reconstruction", "refinement", "scaling_identity",
    "truncation_gap", "uniqueness", "zero_residual",
)

VARIANCE_RADII = tuple(round(0.05 * k, 2) for k in range(1, 20))
SECTION_SOURCE = -0.3
SECTION_POINTS = 41


# ---------------------------------------------------------------------------
# configuration


def _parse_dims(text) -> tuple:
    try:
        dims = tuple(int(t) for t in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"dim must be 2 or 3, got {text!r}") from None
    if not dims:
        raise ConfigError("dim must be 2 or 3")
    return dims


def _parse_int(key, text, lo=0, hi=None) -> int:
    try:
        v = int(str(text).strip())
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {text!r}") from None
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(f"{key} out of range: {v}")
    return v


def _parse_truncation(text) -> tuple:
    parts = str(text).replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"truncation must be 'N_max, K_max', got {text!r}")
    return (_parse_int("n_max", parts[0]), _parse_int("k_max", parts[1], lo=1))


def _parse_suites(text) -> tuple:
    names = tuple(s.strip() for s in str(text).split(",") if s.strip())
    return check_suites(names)


def _parse_tolerance(key, text) -> float:
    if key not in TOLERANCE_KEYS:
        raise ConfigError(f"unknown tolerance {key!r}; expected one of {', '.join(TOLERANCE_KEYS)}")
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"tolerance {key} must be a number, got {text!r}") from None
    if not (np.isfinite(v) and v > 0):
        raise ConfigError(f"tolerance {key} must be a positive number, got {text!r}")
    return v


def read_config_file(path) -> dict:
    """``[run]`` and ``[tolerances]`` sections of key = value pairs."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    unknown = [s for s in parser.sections() if s not in ("run", "tolerances")]
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    out = {}
    if parser.has_section("run"):
        for key, val in parser.items("run"):
            if key not in RUN_KEYS:
                raise ConfigError(f"unknown config key {key!r}; expected one of {', '.join(RUN_KEYS)}")
            out[key] = val
    if parser.has_section("tolerances"):
        out["tolerances"] = dict(parser.items("tolerances"))
    return out


def build_config(args) -> RunConfig:
    """File values first, command-line flags on top."""
    raw = read_config_file(args.config) if args.config else {}
    for key in RUN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    dims = _parse_dims(raw["dim"]) if "dim" in raw else (2, 3)
    seed = _parse_int("seed", raw["seed"], hi=2**64 - 1) if "seed" in raw else DEFAULT_SEED
    replicas = _parse_int("replicas", raw["replicas"], lo=2) if "replicas" in raw else DEFAULT_REPLICAS
    truncation = _parse_truncation(raw["truncation"]) if "truncation" in raw else None
    suites = _parse_suites(raw["suites"]) if "suites" in raw else ()
    tolerances = tuple(sorted((k, _parse_tolerance(k, v)) for k, v in raw.get("tolerances", {}).items()))
    return RunConfig(dims=dims, truncation=truncation, replicas=replicas, seed=seed, suites=suites,
                     tolerances=tolerances, out=raw.get("out", "gff-report"))


def config_hash(config: RunConfig) -> str:
    text = json.dumps(config.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _truncation_label(config: RunConfig, dim: int) -> str:
    spec = config.spec(dim)
    return f"{spec.n_max},{spec.k_max}"


def _stamp(config: RunConfig, dim: int | None = None) -> str:
    dims = config.dims if dim is None else (dim,)
    trunc = "; ".join(f"d={d}: {_truncation_label(config, d)}" for d in dims)
    return f"seed={config.seed} truncation=[{trunc}] config_hash={config_hash(config)}"


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from None


# ---------------------------------------------------------------------------
# basis


def cmd_basis(config: RunConfig) -> int:
    _ensure_dir(config.out)
    tolerances = dict(config.tolerances)
    ok = True
    summary = {"config": config.as_dict(), "config_hash": config_hash(config), "seed": config.seed, "dims": {}}
    for d in config.dims:
        spec = config.spec(d)
        get_basis(spec).write_manifest(os.path.join(config.out, f"basis_manifest_d{d}.csv"),
                                       header_comment=_stamp(config, d))
        checks = run_basis_checks(spec, tolerances, seed=derive_seed(config.seed, "basis", d))
        rows = [{"check": c.name, "residual": c.residual, "tolerance": c.tolerance, "note": c.note,
                 "verdict": "pass" if c.passed else "fail"} for c in checks]
        summary["dims"][str(d)] = {"truncation": [spec.n_max, spec.k_max], "modes": get_basis(spec).size,
                                   "checks": rows}
        for r in rows:
            print(f"d={d} {r['verdict']:4s} {r['check']}: residual {r['residual']:.3e} "
                  f"(tolerance {r['tolerance']:g})")
            ok &= r["verdict"] == "pass"
    _write_json(os.path.join(config.out, "basis_checks.json"), summary)
    return EXIT_OK if ok else EXIT_FAIL


def manifest_row_count(spec: BasisSpec) -> int:
    return sum(multiplicity(n, spec.dim) for n in range(spec.n_max + 1)) * spec.k_max


# ---------------------------------------------------------------------------
# verify


def _job(args):
    name, config, dim = args
    t0 = time.perf_counter()
    try:
        reports = run_suite(name, config, dim)
    except Exception as exc:  # a crashed suite becomes a failed row; the rest still report
        reports = [StatReport(name, "suite completed without error", "", float("nan"), None, 0.0, None, None,
                              "fail", derive_seed(config.seed, name, dim), (0, 0), 0, dim, "error", 0.0,
                              f"{type(exc).__name__}: {exc}")]
        traceback.print_exc(file=sys.stderr)
    return name, dim, reports, time.perf_counter() - t0


def _workers() -> int:
    text = os.environ.get("GFFLAB_WORKERS", "1")
    try:
        n = int(text)
    except ValueError:
        raise ConfigError(f"GFFLAB_WORKERS must be a positive integer, got {text!r}") from None
    if n < 1:
        raise ConfigError(f"GFFLAB_WORKERS must be a positive integer, got {text!r}")
    return n


def run_verify(config: RunConfig, workers: int = 1) -> list:
    """(suite, dim, reports, seconds) for every selected suite and dimension, in sorted order."""
    names = config.suites or SUITE_NAMES
    jobs = [(name, config, d) for name in sorted(names) for d in config.dims]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    return sorted(results, key=lambda r: (r[0], r[1]))


def report_document(config: RunConfig, results) -> dict:
    rows = [r.to_dict() for _, _, reports, _ in results for r in reports]
    suites = {}
    for name, dim, reports, _ in results:
        suites[f"{name}/d{dim}"] = {"passed": sum(r.passed for r in reports), "total": len(reports),
                                    "verdict": "pass" if all(r.passed for r in reports) else "fail"}
    return {
        "config": config.as_dict(),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "truncation": {str(d): [config.spec(d).n_max, config.spec(d).k_max] for d in config.dims},
        "verdict": "pass" if all(r["verdict"] == "pass" for r in rows) else "fail",
        "suites": suites,
        "reports": rows,
    }


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return "" if v is None else v


def write_reports(config: RunConfig, results) -> dict:
    _ensure_dir(config.out)
    doc = report_document(config, results)
    _write_json(os.path.join(config.out, "report.json"), doc)
    with open(os.path.join(config.out, "report.csv"), "w", newline="") as fh:
        fh.write(f"# {_stamp(config)}\n")
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for row in doc["reports"]:
            w.writerow([_csv_value(row[k]) for k in CSV_FIELDS])
    return doc


def cmd_verify(config: RunConfig) -> int:
    workers = _workers()
    _ensure_dir(config.out)
    results = run_verify(config, workers)
    doc = write_reports(config, results)
    for name, dim, reports, secs in results:
        s = doc["suites"][f"{name}/d{dim}"]
        print(f"{s['verdict']:4s} {name:17s} d={dim}  {s['passed']}/{s['total']}  ({secs:.1f} s)")
        for r in reports:
            if not r.passed:
                stat = f"z = {r.z:+.2f}" if r.z is not None else f"residual = {r.residual}" \
                    if r.residual is not None else f"estimate = {r.estimate}"
                print(f"     FAIL {r.test}: {stat} (gate {r.gate:.3g})")
    print(f"overall: {doc['verdict']}  -> {os.path.join(config.out, 'report.json')}")
    return EXIT_OK if doc["verdict"] == "pass" else EXIT_FAIL


# ---------------------------------------------------------------------------
# plot data


def variance_curve_rows(config: RunConfig, d: int):
    """(r, analytic, mc_estimate, stderr) for Var h_r(0) from the spectral sampler."""
    radii = np.array(VARIANCE_RADII)
    analytic = scaling_s(radii, d) - scaling_s(1.0, d)
    model = field_model(BasisSpec(d, 0, RADIAL_K))
    vals = ensemble_values(model, spherical_average_rows(model, radii),
                           derive_seed(config.seed, "plotdata", "variance", d), config.replicas)
    est = np.mean(vals**2, axis=0)
    se = np.std(vals**2, axis=0, ddof=1) / np.sqrt(len(vals))
    return [(float(r), float(a), float(e), float(s)) for r, a, e, s in zip(radii, analytic, est, se)]


def kernel_section_rows(config: RunConfig, d: int):
    """(t, G(x0, t e1)) for t in [0, 1] with x0 = SECTION_SOURCE e1; the last row is the boundary point."""
    x0 = np.zeros(d)
    x0[0] = SECTION_SOURCE
    t = np.linspace(0.0, 1.0, SECTION_POINTS)
    pts = np.zeros((len(t), d))
    pts[:, 0] = t
    g = green_unit_ball(np.broadcast_to(x0, pts.shape), pts, d)
    return [(float(a), float(b)) for a, b in zip(t, g)]


def _write_csv(path, stamp, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {stamp}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def cmd_plotdata(config: RunConfig) -> int:
    from .suites.bounds import ratio_grid_rows

    try:
        _ensure_dir(config.out)
        for d in config.dims:
            stamp = _stamp(config, d)
            _write_csv(os.path.join(config.out, f"variance_curve_d{d}.csv"),
                       stamp + f" replicas={config.replicas} mc_truncation=0,{RADIAL_K}",
                       ("r", "analytic", "mc_estimate", "stderr"), variance_curve_rows(config, d))
            _write_csv(os.path.join(config.out, f"kernel_section_d{d}.csv"),
                       stamp + f" source=({SECTION_SOURCE}, 0) points=t e1",
                       ("t", "green"), kernel_section_rows(config, d))
            _write_csv(os.path.join(config.out, f"bound_ratios_d{d}.csv"), stamp,
                       ("bound", "delta", "level", "separation", "max_ratio"), ratio_grid_rows(d))
    except OSError as exc:
        print(f"error: cannot write plot data: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"plot data written to {config.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfflab", description="Gaussian free field verification lab (d = 2, 3).")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"basis": "build the eigenbasis, run integrity checks, write the manifest",
             "verify": "run verification suites and write JSON/CSV reports",
             "plotdata": "write variance curves, kernel cross-sections and bound ratio grids as CSV"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="key = value config file ([run], [tolerances])")
        p.add_argument("--seed", metavar="U64", help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--dim", choices=("2", "3"), help="dimension (default: both)")
        p.add_argument("--suites", metavar="a,b,c", help="comma-separated suites: " + ", ".join(SUITE_NAMES))
        p.add_argument("--out", metavar="DIR", help="output directory (default gff-report)")
        p.add_argument("--replicas", metavar="N", help=f"replicas per suite (default {DEFAULT_REPLICAS})")
        p.add_argument("--truncation", metavar="N,K", help="basis truncation N_max,K_max (default per dimension)")
    return parser


COMMANDS = {"basis": cmd_basis, "verify": cmd_verify, "plotdata": cmd_plotdata}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        config = build_config(args)
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
