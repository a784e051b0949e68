"""Batch driver: ``nodal-lab --config FILE [flags]``.

Data goes to files (a CSV plus a JSON sidecar next to it), logs go to
standard error. Exit status: 0 when at least one mode succeeded, 1 for
configuration errors, 2 when every mode failed.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import config as config_mod
from .continuation.branch import g_identity, log_integral
from .continuation.millar import growth_profile
from .counting import (
    CSV_FIELDS,
    ContinuedTrace,
    CountRecord,
    count_mode,
    level_max,
    critical_point_count,
    goodness_ratio,
    real_boundary_zeros,
    schiffer_ratio,
    write_records_csv,
)
from .errors import ConfigError, DegenerateTraceError, NodalLabError
from .geometry import circle, read_curve
from .modes import NEUMANN, disc_mode, load_trace

log = logging.getLogger("nodal_lab")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="nodal-lab", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--experiment", choices=config_mod.EXPERIMENTS)
    p.add_argument("--out", help="output CSV path (JSON sidecar written alongside)")
    p.add_argument("--epsilon", help="half-width of the complex strip")
    p.add_argument("--m-range", help="angular indices A:B (inclusive)")
    p.add_argument("--n-range", help="radial indices A:B (inclusive)")
    p.add_argument("--bc", choices=("neumann", "dirichlet"))
    p.add_argument("--parity", choices=("sin", "cos"))
    p.add_argument("--ecc", help="ellipse focal half-distance a (semi-major axis 1)")
    p.add_argument("--threads", help="worker threads (default $NODAL_LAB_THREADS or 1)")
    p.add_argument("--resolution-scale", help="multiply every grid size by S")
    p.add_argument("--method", choices=config_mod.METHODS, help="continuation used for complex counts")
    p.add_argument("--trace", help="trace file for continue/count")
    p.add_argument("--curve", help="curve file (boundary for trace files, interior curve for goodness)")
    p.add_argument("--input", help="CSV to summarize (report)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args):
    pairs = []
    env_threads = os.environ.get("NODAL_LAB_THREADS")
    for key in ("experiment", "out", "epsilon", "m_range", "n_range", "bc", "parity", "ecc",
                "threads", "resolution_scale", "method", "trace", "curve", "input"):
        val = getattr(args, key)
        if val is not None:
            pairs.append((key, val))
    if args.threads is None and env_threads:
        pairs.append(("threads", env_threads))
    return pairs


# --- mode families -----------------------------------------------------------

def _disc_modes(cfg):
    out = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        for m in range(cfg.m_min, cfg.m_max + 1):
            parity = "cos" if m == 0 else cfg.parity
            out.append((f"disc-{parity}{m}-{n}-{cfg.bc}", m, n,
                        lambda m=m, n=n, parity=parity: disc_mode(m, n, cfg.bc, parity)))
    return out


def _ellipse_modes(cfg):
    from .ellipse import ellipse_mode

    out = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        for m in range(cfg.m_min, cfg.m_max + 1):
            parity = "cos" if m == 0 else cfg.parity
            out.append((f"ellipse-{parity}{m}-{n}-{cfg.bc}", m, n,
                        lambda m=m, n=n, parity=parity: ellipse_mode(cfg.ecc, (parity, m, n), cfg.bc)))
    return out


def _single_mode(cfg):
    if cfg.trace is not None:
        curve = read_curve(cfg.curve) if cfg.curve else None
        return load_trace(cfg.trace, curve)
    parity = "cos" if cfg.m_min == 0 else cfg.parity
    return disc_mode(cfg.m_min, cfg.n_min, cfg.bc, parity)


def _mapper(cfg):
    if cfg.threads == 1:
        return map
    pool = ThreadPoolExecutor(max_workers=cfg.threads)
    return pool.map  # preserves submission order


def _failed_record(mode_id, m, n, cfg, exc):
    rec = CountRecord(mode_id, m, n, cfg.bc, float("nan"), cfg.epsilon)
    rec.status = f"failed:{type(exc).__name__}"
    rec.diagnostics["error"] = str(exc)
    return rec


def _scan(cfg, family):
    curve_c = None
    if cfg.experiment == "goodness":
        curve_c = read_curve(cfg.curve) if cfg.curve else circle(cfg.interior_radius)

    def one(item):
        mode_id, m, n, make = item
        t0 = time.perf_counter()
        try:
            mode = make()
            if cfg.experiment == "goodness":
                rec = _goodness_record(mode, cfg, curve_c)
            else:
                rec = count_mode(mode, cfg.epsilon, cfg.method, cfg.resolution_scale,
                                 complex_count=cfg.complex_counts)
        except NodalLabError as exc:
            rec = _failed_record(mode_id, m, n, cfg, exc)
        rec.diagnostics["runtime_s"] = round(time.perf_counter() - t0, 3)
        log.info("%s: %s", rec.mode_id, rec.status)
        return rec

    return list(_mapper(cfg)(one, family))


def _goodness_record(mode, cfg, curve_c):
    md = mode.metadata
    rec = CountRecord(mode.mode_id, md.get("m"), md.get("n"), mode.bc, float(mode.lam), cfg.epsilon)
    rec.n_real = real_boundary_zeros(mode, cfg.resolution_scale)
    try:
        rec.n_crit = critical_point_count(mode, cfg.resolution_scale)
    except DegenerateTraceError:
        rec.status = "partial:n_crit:degenerate"
    if mode.bc == NEUMANN:
        rec.schiffer_ratio = schiffer_ratio(mode)
    try:
        rec.goodness_ratio = goodness_ratio(mode, curve_c)
    except NodalLabError as exc:
        rec.status = f"partial:goodness:{type(exc).__name__}"
    return rec


def summarize(records):
    ok = [r for r in records if r.n_real is not None and r.lam == r.lam]
    out = {"modes": len(records), "succeeded": sum(not r.status.startswith("failed") for r in records)}
    if ok:
        lam = np.array([r.lam for r in ok])
        nr = np.array([r.n_real for r in ok], dtype=float)
        out["n_real_over_lambda_fit"] = float(np.sum(nr * lam) / np.sum(lam**2))
        out["sup_n_real_over_lambda"] = float(np.max(nr / lam))
        out["whispering_gallery"] = bool(np.max(nr / lam) > 1.8)
    nc = [r.n_complex / r.lam for r in ok if r.n_complex is not None]
    if nc:
        out["sup_n_complex_over_lambda"] = float(max(nc))
    out["violations"] = [r.mode_id for r in records if r.status.startswith("violation")]
    return out


def _write_sidecar(cfg, payload):
    with open(cfg.sidecar, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(type(obj).__name__)


# --- experiments -----------------------------------------------------------------

def run_scan(cfg):
    family = _ellipse_modes(cfg) if cfg.experiment == "ellipse-scan" else _disc_modes(cfg)
    records = _scan(cfg, family)
    write_records_csv(records, cfg.out)
    _write_sidecar(cfg, {
        "config": asdict(cfg),
        "summary": summarize(records),
        "modes": [{"mode_id": r.mode_id, "status": r.status, **r.diagnostics} for r in records],
    })
    return EXIT_FAILED if all(r.status.startswith("failed") for r in records) else EXIT_OK


def run_count(cfg):
    t0 = time.perf_counter()
    mode = _single_mode(cfg)
    rec = count_mode(mode, cfg.epsilon, cfg.method, cfg.resolution_scale,
                     complex_count=cfg.complex_counts)
    rec.diagnostics["runtime_s"] = round(time.perf_counter() - t0, 3)
    write_records_csv([rec], cfg.out)
    _write_sidecar(cfg, {"config": asdict(cfg), "record": asdict(rec)})
    return EXIT_FAILED if rec.status.startswith("failed") else EXIT_OK


def branch_audit(curve, epsilon, pairs=50, seed=0):
    """Branch checks for the strip |Im t| <= epsilon of ``curve``.

    g(t) on a 32 x 8 grid, and the gap between the two log-integral formulas
    for ``pairs`` seeded random entire test functions f(s) = exp(a cos(s - b))
    (times e^{iks}) at random t.
    """
    re_t = 2 * np.pi * (np.arange(32) + 0.5) / 32
    im_t = epsilon * np.linspace(-1.0, 1.0, 8)
    g = max(abs(g_identity(curve, complex(x, y))) for x in re_t for y in im_t)
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(pairs):
        a, b = rng.uniform(0.2, 1.5), rng.uniform(0, 2 * np.pi)
        k = int(rng.integers(0, 4))
        t = complex(rng.uniform(0, 2 * np.pi), rng.uniform(-epsilon, epsilon))

        def f(s, a=a, b=b, k=k):
            return np.exp(a * np.cos(s - b) + 1j * k * s)

        gaps.append(log_integral(curve, f, t, strict=False).discrepancy)
    return {"g_identity_max": float(g), "dual_gap_max": float(max(gaps)), "pairs": pairs}


def run_continue(cfg):
    t0 = time.perf_counter()
    mode = _single_mode(cfg)
    f = ContinuedTrace(mode, cfg.method, cfg.resolution_scale)
    eps = cfg.epsilon
    peak = max(level_max(f.level(eps)), level_max(f.level(-eps)))
    payload = {"config": asdict(cfg), "mode_id": mode.mode_id, "lambda": mode.lam,
               "max_log_mod": math.log(peak), "level_check": f.level_check}
    if mode.exact is not None:
        m = mode.metadata.get("m", 0)
        # |sin(m(x + i eps))| and |cos(...)| both peak at cosh(m eps)
        probes = np.array([0.0, np.pi / (2 * m) if m else 0.0])
        amp = float(np.max(np.abs(mode.exact(probes))))
        payload["closed_form_max_log_mod"] = math.log(amp * math.cosh(m * eps))
    if cfg.audit:
        payload["audit"] = branch_audit(mode.curve, eps)
    rows = []
    if cfg.method == "millar":
        prof = growth_profile(mode, eps, n_re=64, cont=f.cont)
        payload["growth_slope"] = prof.slope
        payload["c_hat"] = prof.c_hat
        payload["converged"] = prof.converged
        for lev, vals in zip(prof.levels, prof.values):
            for x, v in zip(prof.re_grid, vals):
                rows.append((x, lev, v))
    else:
        re_grid = 2 * np.pi * np.arange(64) / 64
        for lev in np.linspace(-eps, eps, 9):
            for x, v in zip(re_grid, f(re_grid + 1j * lev)):
                rows.append((x, lev, v))
    with open(cfg.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("re_t", "im_t", "re_u", "im_u"))
        for x, lev, v in rows:
            w.writerow((repr(float(x)), repr(float(lev)), repr(float(v.real)), repr(float(v.imag))))
    payload["runtime_s"] = round(time.perf_counter() - t0, 3)
    _write_sidecar(cfg, payload)
    return EXIT_OK


def run_report(cfg):
    with open(cfg.input, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    missing = [c for c in CSV_FIELDS if rows and c not in rows[0]]
    if not rows or missing:
        raise ConfigError("input", f"not a counting CSV (missing {missing or 'rows'})")

    def num(v, cast):
        return cast(v) if v not in ("", None) else None

    records = []
    for r in rows:
        rec = CountRecord(r["mode_id"], num(r["m"], int), num(r["n"], int), r["bc"],
                          float(r["lambda"]), float(r["epsilon"]), num(r["n_real"], int),
                          num(r["n_complex"], int), num(r["n_crit"], int),
                          num(r["schiffer_ratio"], float), num(r["goodness_ratio"], float),
                          num(r["max_log_mod"], float), r["status"])
        records.append(rec)
    summary = summarize(records)
    with open(cfg.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("metric", "value"))
        for k in sorted(summary):
            w.writerow((k, summary[k]))
    _write_sidecar(cfg, {"config": asdict(cfg), "summary": summary})
    return EXIT_OK


RUNNERS = {
    "disc-scan": run_scan,
    "ellipse-scan": run_scan,
    "goodness": run_scan,
    "count": run_count,
    "continue": run_continue,
    "report": run_report,
}


def run(cfg):
    return RUNNERS[cfg.experiment](cfg)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load(args.config, _overrides(args))
    except ConfigError as exc:
        log.error("configuration error in %s", exc)
        print(f"nodal-lab: config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s -> %s", cfg.experiment, cfg.out)
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"nodal-lab: config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NodalLabError as exc:
        print(f"nodal-lab: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
