"""Batch driver: simulate, model, sweep, report.

Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
3 numerical blow-up.  Outputs are deterministic for a fixed configuration
and thread count; the seed flag only affects randomized sample-point draws.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, load_config
from .diagnostics import bump_hessian_scaling, perturbation_field_bounds
from .experiments import (
    arm_anomaly,
    default_growth_family,
    run_growth_member,
    smooth_random_field,
)
from .fields import Grid, ScalarField, UnresolvedScaleError
from .initial_data import BumpSpec, compose_initial_data, make_bump, mollified_cross
from .ladder import LadderError, resolve_ladder, seed_region_violations
from .model import (
    CrossFieldVariant,
    FlowPerturbation,
    WedgeRegion,
    check_perturbation_admissible,
    contraction_floor,
    integrate_variational,
)
from .manifest import RunManifest, read_manifest
from .series import format_value, write_series_csv
from .solver import (
    BlowUpError,
    SimState,
    diagnostics_with_norms,
    load_state,
    run,
    save_state,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3


def _out_dir(args, cfg):
    out = args.out or (cfg.get_str("output", "dir", None) if cfg else None)
    out = out or os.environ.get("VCROSS_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_checks(path, rows):
    """rows: (name, value, tolerance, passed)."""
    with open(path, "w") as fh:
        fh.write("name,value,tolerance,passed\n")
        for name, value, tol, passed in rows:
            fh.write(
                f"{name},{format_value(value)},{format_value(tol)},{int(bool(passed))}\n"
            )


def _read_checks(path):
    rows = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            name, value, tol, passed = line.strip().split(",")
            rows.append((name, float(value), float(tol), bool(int(passed))))
    return rows


def _build_ladder(cfg):
    mode = cfg.get_str("ladder", "mode", "relaxed")
    horizon = cfg.get_float("ladder", "horizon", 1.0)
    factor = cfg.get_float("ladder", "growth_factor", 10.0)
    overrides = {}
    for name in ("outer", "inner", "drift", "cross_width", "mollifier"):
        val = cfg.get_float("ladder", name, None)
        if val is not None:
            overrides[name] = math.log10(val)
        lg = cfg.get_float("ladder", f"log10_{name}", None)
        if lg is not None:
            overrides[name] = lg
    exp_override = cfg.get_float("ladder", "seed_exponent", None)
    if exp_override is not None:
        overrides["seed_exponent"] = exp_override
    return resolve_ladder(horizon, factor, mode, overrides or None)


def _build_initial(cfg, grid, ladder):
    kind = cfg.get_str("init", "kind", "cross")
    if kind == "shear":
        amp = cfg.get_float("init", "amplitude", 1.0)
        return ScalarField.from_values(
            grid, amp * np.outer(np.cos(grid.x), np.ones(grid.n))
        )
    if kind == "random":
        return smooth_random_field(
            grid,
            seed=cfg.get_int("init", "seed", 0),
            sup=cfg.get_float("init", "amplitude", 1.0),
        )
    if kind == "cross":
        return mollified_cross(grid, cfg.get_float("init", "sigma"))
    if kind == "cross+bump":
        spec = BumpSpec(
            (cfg.get_float("bump", "center_x"), cfg.get_float("bump", "center_y")),
            cfg.get_float("bump", "support"),
            cfg.get_float("bump", "height"),
        )
        return compose_initial_data(grid, ladder, spec, cfg.get_float("init", "sigma"))
    if kind == "snapshot":
        return load_state(cfg.get_str("init", "path")).theta
    raise ConfigError(f"unknown [init] kind {kind!r}")


def cmd_simulate(args):
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    t_start = time.perf_counter()
    grid = Grid(cfg.get_int("grid", "n"))
    ladder = _build_ladder(cfg)
    theta = _build_initial(cfg, grid, ladder)
    alpha = cfg.get_float("solver", "alpha", 1.0)
    state = SimState(theta, inversion_exponent=alpha)
    manifest = RunManifest(
        "simulate", cfg.raw_text, out, grid_n=grid.n, ladder_text=ladder.serialize()
    )
    save_state(manifest.add_output(os.path.join(out, "initial.vcrs")), state)

    t_end = cfg.get_float("time", "t_end")
    result = run(
        state,
        t_end,
        cfl=cfg.get_float("time", "cfl", 0.4),
        sample_every=cfg.get_float("time", "sample_every", None),
        diagnostics=diagnostics_with_norms(),
    )
    if t_end > state.time:
        save_state(manifest.add_output(os.path.join(out, "final.vcrs")), result.state)
    write_series_csv(
        manifest.add_output(os.path.join(out, "series.csv")), result.series_list()
    )

    failures = 0
    if cfg.has("checks"):
        rows = []
        for name in ("energy", "enstrophy"):
            tol = cfg.get_float("checks", f"{name}_drift", None)
            if tol is None or len(result.series[name]) == 0:
                continue
            vals = result.series[name].values
            drift = abs(vals[-1] - vals[0]) / max(abs(vals[0]), 1e-300)
            rows.append((f"{name}_drift", drift, tol, drift <= tol))
        parity_tol = cfg.get_float("checks", "parity", None)
        if parity_tol is not None:
            v = result.state.theta.values
            mirrored = np.roll(v[::-1, ::-1], (1, 1), (0, 1))
            err = float(np.max(np.abs(v - mirrored)))
            rows.append(("parity_sup_error", err, parity_tol, err <= parity_tol))
        _write_checks(manifest.add_output(os.path.join(out, "checks.csv")), rows)
        failures = sum(1 for r in rows if not r[3])

    manifest.timings["total"] = time.perf_counter() - t_start
    manifest.note(f"steps = {result.steps}")
    manifest.write()
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def _demo_perturbation(upsilon):
    scale = 0.5e-4 * upsilon

    def nu1(x, y, t):
        return scale * x * np.cos(y)

    def nu2(x, y, t):
        return scale * y * np.cos(x)

    return FlowPerturbation(nu1, nu2, upsilon)


def cmd_model(args):
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    t_start = time.perf_counter()
    kind = cfg.get_str("model", "variant", "exact")
    variant = CrossFieldVariant(
        kind,
        c1=cfg.get_float("model", "c1", 0.5),
        c2=cfg.get_float("model", "c2", 1.0),
    )
    ladder = _build_ladder(cfg)
    region = WedgeRegion.from_log10(ladder.log10_inner, ladder.log10_outer)
    T = cfg.get_float("trajectory", "T", 1.0)
    dt = cfg.get_float("trajectory", "dt", 1e-3)

    pert_kind = cfg.get_str("perturbation", "kind", "none")
    if pert_kind == "none":
        pert = FlowPerturbation()
    elif pert_kind == "demo":
        upsilon = cfg.get_float("perturbation", "upsilon", ladder.value("drift"))
        pert = _demo_perturbation(upsilon)
        factor = cfg.get_float("perturbation", "scale", 1.0)
        if factor != 1.0:
            base = pert
            pert = FlowPerturbation(
                lambda x, y, t: factor * base.nu1(x, y, t),
                lambda x, y, t: factor * base.nu2(x, y, t),
                upsilon,
            )
        report = check_perturbation_admissible(pert, region, samples=200, t_max=T,
                                               seed=args.seed)
        if not report.passed:
            print(
                f"perturbation inadmissible: value margin {report.value_margin:.3g}, "
                f"gradient margin {report.grad_margin:.3g}, "
                f"witness {report.value_witness}",
                file=sys.stderr,
            )
            return EXIT_USAGE
    else:
        raise ConfigError(f"unknown [perturbation] kind {pert_kind!r}")

    if cfg.has("trajectory", "count"):
        count = cfg.get_int("trajectory", "count")
        rng = np.random.default_rng(args.seed)
        points = _sample_seed_box(ladder, count, rng)
    else:
        points = [(cfg.get_float("trajectory", "x0"), cfg.get_float("trajectory", "y0"))]
        bad = seed_region_violations(points[0][0], points[0][1], ladder)
        if bad:
            print(
                f"start point {points[0]} outside the admissible seed box: "
                + ", ".join(bad),
                file=sys.stderr,
            )
            return EXIT_USAGE

    manifest = RunManifest(
        "model", cfg.raw_text, out, ladder_text=ladder.serialize()
    )
    summary_rows = []
    for i, (x0, y0) in enumerate(points):
        path = integrate_variational(
            (x0, y0), T, perturbation=pert, variant=variant, region=region, dt=dt
        )
        path.write_csv(manifest.add_output(os.path.join(out, f"path_{i:03d}.csv")))
        floor_log = contraction_floor(T, y0, 1.0, as_log=True)
        key_bound = (1.0 / y0) ** ((math.exp(T) - 1.0) / 2.0)
        summary_rows.append(
            (
                x0,
                y0,
                path.exit_time if path.exit_time is not None else math.nan,
                path.x[-1],
                path.y[-1],
                path.jac[-1, 0, 0],
                key_bound,
                floor_log,
            )
        )
    with open(
        manifest.add_output(os.path.join(out, "summary.csv")), "w"
    ) as fh:
        fh.write("x0,y0,exit_time,x_final,y_final,xa_final,key_bound,floor_log\n")
        for row in summary_rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    manifest.timings["total"] = time.perf_counter() - t_start
    manifest.write()
    return EXIT_OK


def _sample_seed_box(ladder, count, rng):
    """Draw points from the admissible box in log space."""
    lo_l10, out_l10 = ladder.log10_inner, ladder.log10_outer
    E = ladder.seed_exponent
    points = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise LadderError(["seed_box_effectively_empty"])
        ly = rng.uniform(out_l10 - 0.15, out_l10 - 0.005)
        hi = E * ly - 0.05
        lo = lo_l10 + 0.1
        if hi <= lo:
            continue
        lx = rng.uniform(lo, hi)
        points.append((10.0**lx, 10.0**ly))
    return points


def _sweep_member_runner(payload):
    kind, value, params = payload
    if kind == "steepness":
        n = params["n"]
        grid = Grid(n)
        member = default_growth_family(grid, requested=[value])[0]
        rec = run_growth_member(n, member, T=params["T"])
        series = rec.series["grad_sup"]
        ratio = float(np.max(series.values) / series.values[0])
        return value, {"grad0": float(series.values[0]), "max_ratio": ratio}
    if kind == "n":
        n = int(value)
        grid = Grid(n)
        theta = mollified_cross(grid, params["sigma"])
        result = run(SimState(theta), params["T"], sample_every=params["T"])
        en = result.series["enstrophy"].values
        return value, {
            "grad_final": float(result.series["grad_sup"].values[-1]),
            "enstrophy_drift": float(abs(en[-1] - en[0]) / en[0]),
        }
    if kind == "alpha":
        n = params["n"]
        grid = Grid(n)
        theta = smooth_random_field(grid, seed=params.get("seed", 0))
        state = SimState(theta, inversion_exponent=float(value))
        result = run(state, params["T"], sample_every=params["T"] / 8.0)
        g = result.series["grad_sup"].values
        return value, {"grad_growth": float(g.max() / g[0])}
    raise ValueError(f"unknown sweep member kind {kind!r}")


def cmd_sweep(args):
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    t_start = time.perf_counter()
    axis = cfg.get_str("sweep", "axis")
    values = cfg.get_floats("sweep", "values")
    manifest = RunManifest("sweep", cfg.raw_text, out)
    rows = []
    fit_note = None

    if axis in ("steepness", "n", "alpha"):
        params = {
            "n": cfg.get_int("base", "n", 256),
            "T": cfg.get_float("base", "T", 1.0),
            "sigma": cfg.get_float("base", "sigma", 0.25),
            "seed": args.seed,
        }
        payloads = [(axis, v, params) for v in values]
        if args.threads > 1:
            with ProcessPoolExecutor(max_workers=args.threads) as pool:
                futures = [pool.submit(_sweep_member_runner, p) for p in payloads]
                results = []
                for p, fut in zip(payloads, futures):
                    try:
                        results.append(fut.result())
                    except Exception as exc:  # partial failures recorded
                        manifest.note(f"member {p[1]} failed: {exc}")
                        results.append((p[1], {"error": 1.0}))
        else:
            results = []
            for p in payloads:
                try:
                    results.append(_sweep_member_runner(p))
                except Exception as exc:  # partial failures recorded, sweep continues
                    manifest.note(f"member {p[1]} failed: {exc}")
                    results.append((p[1], {"error": 1.0}))
        for value, record in results:
            rows.append((value, record))
        if axis == "steepness":
            ratios = [r.get("max_ratio", math.nan) for _, r in rows]
            ok = all(
                b >= a - 1e-12 for a, b in zip(ratios, ratios[1:]) if not math.isnan(b)
            )
            fit_note = f"ratio_monotone = {int(ok)}"
    elif axis == "tau":
        n = cfg.get_int("base", "n", 1024)
        grid = Grid(n)
        radii = cfg.get_floats("base", "radii", [0.05, 0.1, 0.2])
        for tau in values:
            p = arm_anomaly(grid, tau)
            rep = perturbation_field_bounds(p, cfg.get_float("base", "inner", 1e-3), radii)
            rec = {"hessian_sup": rep.hessian_sup, "origin_ratio": rep.origin_value / rep.field_max}
            for r, s in zip(rep.radii, rep.sup_ratio):
                rec[f"sup_ratio_r{r:g}"] = float(s)
            rec["tau_log_tau"] = float(tau * abs(math.log(tau)))
            rows.append((tau, rec))
    elif axis == "omega":
        n = cfg.get_int("base", "n", 1024)
        grid = Grid(n)
        base_support = cfg.get_float("base", "support", 0.5)
        aspect = cfg.get_float("base", "aspect", 3.0)  # height / support
        bumps = []
        for k in range(len(values)):
            h1 = base_support / (2.0 ** (k / 2.0))  # halves the L2 norm each step
            spec = BumpSpec((1.8, 2.6), h1, aspect * h1)
            bumps.append(make_bump(grid, spec))
        scaling = bump_hessian_scaling(bumps)
        for k, v in enumerate(values):
            rows.append(
                (
                    v,
                    {
                        "l2": float(scaling.l2_norms[k]),
                        "grad_sup": float(scaling.grad_sups[k]),
                        "hessian_sup": float(scaling.hessian_sups[k]),
                    },
                )
            )
        fit_note = f"hessian_slope = {scaling.fit.slope:.6g}"
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")

    keys = sorted({k for _, rec in rows for k in rec})
    with open(manifest.add_output(os.path.join(out, "aggregate.csv")), "w") as fh:
        fh.write("value," + ",".join(keys) + "\n")
        for value, rec in rows:
            cells = [format_value(value)] + [
                format_value(rec.get(k, math.nan)) for k in keys
            ]
            fh.write(",".join(cells) + "\n")
    if fit_note:
        manifest.note(fit_note)
    manifest.timings["total"] = time.perf_counter() - t_start
    manifest.write()
    return EXIT_OK


def cmd_report(args):
    rows = []
    missing = []
    for mpath in args.manifests:
        if not os.path.exists(mpath):
            missing.append(mpath)
            continue
        header, outputs, _ = read_manifest(mpath)
        base = os.path.dirname(os.path.abspath(mpath))
        for rel in outputs:
            if os.path.basename(rel) != "checks.csv":
                continue
            cpath = os.path.join(base, rel)
            if not os.path.exists(cpath):
                missing.append(cpath)
                continue
            for name, value, tol, passed in _read_checks(cpath):
                rows.append((mpath, name, value, tol, passed))
    if missing:
        for m in missing:
            print(f"missing file: {m}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "report.csv"), "w") as fh:
        fh.write("manifest,check,value,tolerance,passed\n")
        for mpath, name, value, tol, passed in rows:
            fh.write(
                f"{mpath},{name},{format_value(value)},{format_value(tol)},{int(passed)}\n"
            )
    n_failed = sum(1 for r in rows if not r[4])
    for mpath, name, value, tol, passed in rows:
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name:<24} value={value:.6g} tol={tol:.6g}  ({mpath})")
    print(f"{len(rows)} checks, {n_failed} failed")
    if not rows or n_failed:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vcross",
        description="Batch driver for the cross-flow gradient-growth laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("simulate", cmd_simulate),
        ("model", cmd_model),
        ("sweep", cmd_sweep),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(fn=fn)
    p = sub.add_parser("report")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ConfigError, LadderError, UnresolvedScaleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc} (path: {getattr(exc, 'filename', '?')})", file=sys.stderr)
        return EXIT_USAGE
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
