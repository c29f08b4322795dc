"""Command-line surface: point evaluation, sweeps, figure data, debugging.

Subcommands
-----------
eval          one (lambda0, t, method) sample, optionally with entropy
sweep         cartesian (lambda0, t, method) grid -> CSV + JSON manifest
figure        regenerate the data files behind the seven standard figures
specfun-eval  raw special-function evaluation (debugging aid)

Exit codes: 0 success, 2 any flagged/unconverged sample, 64 usage error.
Floats are rendered with 17 significant digits so CSV bytes round-trip and
diff cleanly; identical invocations produce identical CSV bytes regardless
of --workers.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__, specfun
from .freeenergy import (
    LOWT_INTEGRAL_FORMS,
    METHODS,
    ShellParams,
    compute_sample,
    entropy,
    lowT_closed_aF,
    lowT_integral_aF,
    strong_lowT_aF,
    weak1_aF,
    weak_lowT_aF,
)
from .quadrature import QuadratureConfig

USAGE_ERROR = 64
FLAGGED = 2

CSV_HEADER = "lambda0,t,alpha,xi,method,aF,aS,err,l_max,flags"

SPECFUN_NAMES = {
    "riccati_s": lambda l, x: specfun.riccati_s(l, x),
    "riccati_e": lambda l, x: specfun.riccati_e(l, x),
    "riccati_s_prime": lambda l, x: specfun.riccati_s_prime(l, x),
    "riccati_e_prime": lambda l, x: specfun.riccati_e_prime(l, x),
    "f_H": lambda l, x: specfun.f_H(l, x),
    "calJ": lambda l, x: specfun.calJ(l + 0.5, x),
    "calY": lambda l, x: specfun.calY(l + 0.5, x),
    "digamma_re_shifted": lambda l, x: specfun.digamma_re_shifted(x),
}


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{float(v):.16e}"


def _usage_fail(msg: str) -> "NoReturn":
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(USAGE_ERROR)


# --------------------------------------------------------------------------
# config file / value-list parsing
# --------------------------------------------------------------------------

_CONFIG_KEYS = {
    "rel_tol": float,
    "abs_tol": float,
    "tail_cut_weight": float,
    "max_subdivisions": int,
    "l_hard_cap": int,
    "pv_eps0": float,
    "pv_eps_factor": float,
    "precision": str,
    "cancel_bound": float,
}


def read_config_file(path: str) -> dict:
    """Flat key=value text; blank lines and '#' comments ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                _usage_fail(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def build_config(args, file_cfg: dict) -> QuadratureConfig:
    cfg = QuadratureConfig()
    updates = {}
    for key, conv in _CONFIG_KEYS.items():
        if key in file_cfg:
            updates[key] = conv(file_cfg[key])
    if getattr(args, "rel_tol", None) is not None:
        updates["rel_tol"] = args.rel_tol
    if getattr(args, "abs_tol", None) is not None:
        updates["abs_tol"] = args.abs_tol
    try:
        return replace(cfg, **updates)
    except ValueError as exc:
        _usage_fail(str(exc))


def parse_values(spec: str) -> list[float]:
    """Comma list, 'logspace:a:b:n', or 'linspace:a:b:n'."""
    spec = spec.strip()
    if spec.startswith("logspace:") or spec.startswith("linspace:"):
        kind, a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            _usage_fail(f"need at least one point in {spec!r}")
        if kind == "logspace":
            if a <= 0 or b <= 0:
                _usage_fail("logspace endpoints must be positive")
            vals = np.geomspace(a, b, n)
        else:
            vals = np.linspace(a, b, n)
        return [float(v) for v in vals]
    try:
        vals = [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        _usage_fail(f"cannot parse value list {spec!r}")
    if not vals:
        _usage_fail(f"empty value list {spec!r}")
    return vals


# --------------------------------------------------------------------------
# sample -> row
# --------------------------------------------------------------------------

def _flags_str(flags) -> str:
    return "|".join(flags) if flags else "ok"


def _row_for(lambda0: float, t: float, method: str, cfg_dict: dict, want_entropy: bool,
             form: str) -> dict:
    cfg = QuadratureConfig(**cfg_dict)
    params = ShellParams(lambda0, t)
    row = {
        "lambda0": lambda0,
        "t": t,
        "alpha": params.alpha,
        "xi": params.xi,
        "method": method,
        "aF": None,
        "aS": None,
        "err": None,
        "l_max": None,
        "flags": [],
    }
    # per-row failures are recorded, never allowed to abort the grid
    try:
        sample = compute_sample(params, method, config=cfg, form=form)
    except Exception as exc:
        row["flags"] = [f"error:{type(exc).__name__}"]
        return row
    row["aF"] = sample.aF
    row["err"] = sample.error_estimate
    row["l_max"] = sample.l_max
    row["flags"] = list(sample.flags)
    if want_entropy:
        try:
            es = entropy(params, method, config=cfg, form=form)
            row["aS"] = es.aS
            row["flags"] = sorted(set(row["flags"]) | set(es.flags))
        except ValueError:
            row["flags"] = sorted(set(row["flags"]) | {"entropy_skipped"})
    return row


def _csv_line(row: dict) -> str:
    return ",".join([
        _fmt(row["lambda0"]),
        _fmt(row["t"]),
        _fmt(row["alpha"]),
        _fmt(row["xi"]),
        row["method"],
        _fmt(row["aF"]),
        _fmt(row["aS"]) if row["aS"] is not None else "",
        _fmt(row["err"]),
        str(row["l_max"]) if row["l_max"] is not None else "",
        _flags_str(row["flags"]),
    ])


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------

def cmd_eval(args) -> int:
    if args.method not in METHODS:
        _usage_fail(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    if args.lambda0 <= 0 or args.t <= 0:
        _usage_fail("lambda0 and t must be positive")
    file_cfg = read_config_file(args.config) if args.config else {}
    cfg = build_config(args, file_cfg)
    row = _row_for(args.lambda0, args.t, args.method, asdict(cfg), args.entropy, args.form)
    print(f"method={row['method']} lambda0={_fmt(row['lambda0'])} t={_fmt(row['t'])} "
          f"aF={_fmt(row['aF'])} err={_fmt(row['err'])} "
          f"l_max={row['l_max'] if row['l_max'] is not None else '-'} "
          f"flags={_flags_str(row['flags'])}")
    if args.entropy and row["aS"] is not None:
        print(f"aS={_fmt(row['aS'])}")
    if args.manifest:
        record = dict(row)
        record["tool_version"] = __version__
        with open(args.manifest, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")
    return FLAGGED if row["flags"] else 0


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def _worker_row(task):
    lambda0, t, method, cfg_dict, want_entropy, form = task
    return _row_for(lambda0, t, method, cfg_dict, want_entropy, form)


def run_sweep(lambda0_values, t_values, methods, cfg: QuadratureConfig, *, workers: int = 1,
              want_entropy: bool = False, form: str = "arctan"):
    """Evaluate a cartesian grid; row order is the grid order, not completion order."""
    tasks = [
        (l0, t, m, asdict(cfg), want_entropy, form)
        for l0 in lambda0_values
        for t in t_values
        for m in methods
    ]
    if workers <= 1:
        rows = [_worker_row(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_worker_row, tasks, chunksize=1))
    return rows


def cmd_sweep(args) -> int:
    file_cfg = read_config_file(args.config) if args.config else {}
    grid_cfg = read_config_file(args.grid_file) if args.grid_file else {}

    def pick(flag_val, key):
        return flag_val if flag_val is not None else grid_cfg.get(key)

    lam_spec = pick(args.lambda0_values, "lambda0_values")
    t_spec = pick(args.t_values, "t_values")
    method_spec = pick(args.methods, "methods")
    if not lam_spec or not t_spec:
        _usage_fail("sweep needs --lambda0-values and --t-values (or a grid file)")
    if not method_spec:
        _usage_fail("sweep needs a non-empty --methods list")
    lambda0_values = parse_values(lam_spec)
    t_values = parse_values(t_spec)
    methods = [m.strip() for m in method_spec.split(",") if m.strip()]
    if not methods:
        _usage_fail("sweep needs a non-empty --methods list")
    for m in methods:
        if m not in METHODS:
            _usage_fail(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if any(v <= 0 for v in lambda0_values + t_values):
        _usage_fail("grid values must be positive")

    cfg = build_config(args, {**grid_cfg, **file_cfg})
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    started = time.time()
    rows = run_sweep(lambda0_values, t_values, methods, cfg, workers=workers,
                     want_entropy=args.entropy, form=args.form)
    wall = time.time() - started

    lines = [CSV_HEADER] + [_csv_line(r) for r in rows]
    payload = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)

    if args.manifest:
        manifest = {
            "schema_version": 1,
            "tool": "casimir-shell",
            "tool_version": __version__,
            "config": asdict(cfg),
            "grid": {
                "lambda0_values": lambda0_values,
                "t_values": t_values,
                "methods": methods,
                "entropy": bool(args.entropy),
                "form": args.form,
            },
            "rows": rows,
            "wall_time_s": wall,
            "workers": workers,
        }
        with open(args.manifest, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, default=list)
            fh.write("\n")
    return FLAGGED if any(r["flags"] for r in rows) else 0


# --------------------------------------------------------------------------
# figure data
# --------------------------------------------------------------------------

FIGURE_NOTES = {
    1: "low-temperature bracket vs xi: closed form and integral form at alpha 0.1, 0.01",
    2: "free energy vs t at lambda0 0.5, 1, 2: exact and low-T closed panels",
    3: "ratio to the strong-coupling t^4 law vs t, same couplings, two panels",
    4: "ratio to the weak-coupling t^2 law vs t at lambda0 1e-4, 2e-4, 4e-4, two panels",
    5: "ratio to the strong-coupling t^4 law vs lambda0 at t 0.025, 0.05, 0.1, two panels",
    6: "exact over order-lambda0 ratio vs t for lambda0 1e-3, 0.1, 0.5",
    7: "order-lambda0 free energy vs alpha against low/high temperature limits",
}


def _fig_label(v: float) -> str:
    return f"{v:g}"


def _write_csv(path, header_cols, rows_of_floats):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header_cols) + "\n")
        for row in rows_of_floats:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _bracket_closed(xi: float) -> float:
    return xi * xi / 12.0 - math.log(xi) - specfun.digamma_re_shifted(xi)


def _bracket_integral(xi: float, alpha: float, cfg: QuadratureConfig) -> float:
    lam = 1.5 * (alpha / xi) ** 2
    sample = lowT_integral_aF(ShellParams(lam, alpha / (2 * math.pi)), form="arctan", config=cfg)
    return sample.aF * math.pi / (2.0 * lam / 3.0) ** 2


def _ratio_rows(axis_vals, curve_vals, fn):
    rows = []
    for a in axis_vals:
        row = [a]
        for c in curve_vals:
            row.append(fn(a, c))
        rows.append(row)
    return rows


def cmd_figure(args) -> int:
    if args.id not in FIGURE_NOTES:
        _usage_fail("figure id must be in 1..7")
    file_cfg = read_config_file(args.config) if args.config else {}
    cfg = build_config(args, file_cfg)
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    fid = args.id

    def exact_grid(lams, ts):
        rows = run_sweep(lams, ts, ["exact"], cfg, workers=workers)
        return {(r["lambda0"], r["t"]): r["aF"] for r in rows}

    wrote = []
    if fid == 1:
        xis = parse_values(args.xi_values) if args.xi_values else [float(v) for v in np.geomspace(0.3, 10.0, 41)]
        cols = ["xi", "bracket_closed", "bracket_integral_alpha_0.1", "bracket_integral_alpha_0.01"]
        rows = [[xi, _bracket_closed(xi), _bracket_integral(xi, 0.1, cfg), _bracket_integral(xi, 0.01, cfg)]
                for xi in xis]
        _write_csv(os.path.join(outdir, "fig1.csv"), cols, rows)
        wrote.append("fig1.csv")
    elif fid in (2, 3):
        lams = parse_values(args.lambda0_values) if args.lambda0_values else [0.5, 1.0, 2.0]
        ts = parse_values(args.t_values) if args.t_values else [float(v) for v in np.geomspace(0.02, 1.0, 40)]
        aF = exact_grid(lams, ts)
        cols = ["t"] + [f"lambda0_{_fig_label(l0)}" for l0 in lams]
        if fid == 2:
            rows_e = [[t] + [aF[(l0, t)] for l0 in lams] for t in ts]
            rows_l = [[t] + [lowT_closed_aF(ShellParams(l0, t)).aF for l0 in lams] for t in ts]
        else:
            rows_e = [[t] + [aF[(l0, t)] / strong_lowT_aF(t).aF for l0 in lams] for t in ts]
            rows_l = [[t] + [lowT_closed_aF(ShellParams(l0, t)).aF / strong_lowT_aF(t).aF for l0 in lams]
                      for t in ts]
        _write_csv(os.path.join(outdir, f"fig{fid}_exact.csv"), cols, rows_e)
        _write_csv(os.path.join(outdir, f"fig{fid}_lowT.csv"), cols, rows_l)
        wrote += [f"fig{fid}_exact.csv", f"fig{fid}_lowT.csv"]
    elif fid == 4:
        lams = parse_values(args.lambda0_values) if args.lambda0_values else [1e-4, 2e-4, 4e-4]
        ts = parse_values(args.t_values) if args.t_values else [float(v) for v in np.geomspace(0.004, 0.12, 25)]
        aF = exact_grid(lams, ts)
        cols = ["t"] + [f"lambda0_{_fig_label(l0)}" for l0 in lams]
        rows_e = [[t] + [aF[(l0, t)] / weak_lowT_aF(ShellParams(l0, t)).aF for l0 in lams] for t in ts]
        rows_l = [[t] + [lowT_closed_aF(ShellParams(l0, t)).aF / weak_lowT_aF(ShellParams(l0, t)).aF
                         for l0 in lams] for t in ts]
        _write_csv(os.path.join(outdir, "fig4_exact.csv"), cols, rows_e)
        _write_csv(os.path.join(outdir, "fig4_lowT.csv"), cols, rows_l)
        wrote += ["fig4_exact.csv", "fig4_lowT.csv"]
    elif fid == 5:
        lams = parse_values(args.lambda0_values) if args.lambda0_values else [float(v) for v in np.geomspace(1e-5, 1.0, 25)]
        ts = parse_values(args.t_values) if args.t_values else [0.025, 0.05, 0.1]
        aF = exact_grid(lams, ts)
        cols = ["lambda0"] + [f"t_{_fig_label(t)}" for t in ts]
        rows_e = [[l0] + [aF[(l0, t)] / strong_lowT_aF(t).aF for t in ts] for l0 in lams]
        rows_l = [[l0] + [lowT_closed_aF(ShellParams(l0, t)).aF / strong_lowT_aF(t).aF for t in ts]
                  for l0 in lams]
        _write_csv(os.path.join(outdir, "fig5_exact.csv"), cols, rows_e)
        _write_csv(os.path.join(outdir, "fig5_lowT.csv"), cols, rows_l)
        wrote += ["fig5_exact.csv", "fig5_lowT.csv"]
    elif fid == 6:
        lams = parse_values(args.lambda0_values) if args.lambda0_values else [1e-3, 0.1, 0.5]
        ts = parse_values(args.t_values) if args.t_values else [float(v) for v in np.geomspace(0.25, 5.0, 10)]
        aF = exact_grid(lams, ts)
        cols = ["t"] + [f"lambda0_{_fig_label(l0)}" for l0 in lams]
        rows = [[t] + [aF[(l0, t)] / weak1_aF(ShellParams(l0, t)).aF for l0 in lams] for t in ts]
        _write_csv(os.path.join(outdir, "fig6.csv"), cols, rows)
        wrote.append("fig6.csv")
    else:
        alphas = parse_values(args.alpha_values) if args.alpha_values else [float(v) for v in np.geomspace(0.05, 50.0, 60)]
        cols = ["alpha", "weak1_scaled", "low_t_limit", "high_t_limit"]
        rows = []
        for a in alphas:
            t = a / (2 * math.pi)
            scaled = weak1_aF(ShellParams(1.0, t)).aF * math.pi
            rows.append([a, scaled, a * a / 18.0, a * a / 72.0])
        _write_csv(os.path.join(outdir, "fig7.csv"), cols, rows)
        wrote.append("fig7.csv")

    for name in wrote:
        print(f"wrote {os.path.join(outdir, name)}")
    return 0


# --------------------------------------------------------------------------
# specfun-eval (hidden debugging aid)
# --------------------------------------------------------------------------

def cmd_specfun_eval(args) -> int:
    if args.name not in SPECFUN_NAMES:
        _usage_fail(f"unknown function {args.name!r}; choose from {', '.join(SPECFUN_NAMES)}")
    try:
        v = SPECFUN_NAMES[args.name](args.l, args.x)
    except (ValueError, specfun.RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.name}(l={args.l}, x={_fmt(args.x)}) = {v:.17g}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--abs-tol", type=float, default=None)
    p.add_argument("--config", help="flat key=value config file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="casimir-shell",
                                 description="TM Casimir self free energy of a plasma-shell sphere")
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate one sample")
    pe.add_argument("--lambda0", type=float, required=True)
    pe.add_argument("--t", type=float, required=True)
    pe.add_argument("--method", required=True)
    pe.add_argument("--form", default="arctan", choices=LOWT_INTEGRAL_FORMS)
    pe.add_argument("--entropy", action="store_true")
    pe.add_argument("--manifest")
    _add_common(pe)
    pe.set_defaults(func=cmd_eval)

    ps = sub.add_parser("sweep", help="cartesian parameter sweep -> CSV")
    ps.add_argument("--lambda0-values")
    ps.add_argument("--t-values")
    ps.add_argument("--methods")
    ps.add_argument("--form", default="arctan", choices=LOWT_INTEGRAL_FORMS)
    ps.add_argument("--entropy", action="store_true")
    ps.add_argument("--grid-file")
    ps.add_argument("--out")
    ps.add_argument("--manifest")
    ps.add_argument("--workers", type=int, default=None)
    _add_common(ps)
    ps.set_defaults(func=cmd_sweep)

    pf = sub.add_parser("figure", help="regenerate data behind one of the seven figures")
    pf.add_argument("--id", type=int, required=True)
    pf.add_argument("--outdir", required=True)
    pf.add_argument("--workers", type=int, default=None)
    pf.add_argument("--lambda0-values")
    pf.add_argument("--t-values")
    pf.add_argument("--xi-values")
    pf.add_argument("--alpha-values")
    _add_common(pf)
    pf.set_defaults(func=cmd_figure)

    pq = sub.add_parser("specfun-eval", help="raw special-function evaluation")
    pq.add_argument("--name", required=True)
    pq.add_argument("--l", type=int, default=1)
    pq.add_argument("--x", type=float, required=True)
    pq.set_defaults(func=cmd_specfun_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
