"""Command-line front end: load config, dispatch subcommands, emit CSV + manifest.

Subcommands: madep (closed-form vs Monte Carlo grids), validate (oracle
agreement report), optimize (single AO run with trace), sweep (generic
parameter sweep), figure (named experiment presets).

Every CSV is written alongside a JSON manifest capturing the resolved
scenario, the sweep, and the seed; re-running from the same manifest
reproduces the CSV byte for byte.

Exit codes: 0 success, 1 usage error, 2 config error, 3 infeasible everywhere.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .channel import sample_channels
from .covert import DetectionContext, madep_manifold, mc_min_dep, optimal_threshold, dep
from .driver import (MADEP_SCHEMES, RATE_SCHEMES, SweepSpec, _base_context,
                     algorithm2, algorithm3, rows_to_csv, run_sweep)
from .scenario import derive_path_losses, load_scenario, with_updates

# Experiment presets: parameter axis, values, schemes, and scenario overrides.
# Realization counts are desk-scale defaults; override with --realizations.
FIGURE_PRESETS = {
    "fig2": {
        "doc": "MADEP vs covert power share (closed form vs Monte Carlo)",
        "scenario": {"pt_dbm": 25.0, "k_n": 40, "k_m": 24},
        "sweep": {"param": "a1", "values": [round(0.1 * i, 1) for i in range(1, 10)],
                  "schemes": ["madep_closed", "madep_mc"]},
    },
    "fig3": {
        "doc": "MADEP vs number of reflecting elements",
        "scenario": {"pt_dbm": 25.0, "k_n": 64, "k_m": 64},
        "sweep": {"param": "k_n", "values": [8, 16, 32, 48, 64, 80, 96, 112, 120],
                  "schemes": ["madep_closed", "madep_mc"]},
    },
    "fig4": {
        "doc": "AO convergence traces (per-iteration covert rate)",
        "scenario": {"k_n": 16, "k_m": 48, "epsilon": 0.1, "rg_min": 1.0},
        "trace_pt": [20.0, 30.0],
        "trace_kn": [16, 32],
    },
    "fig5": {
        "doc": "covert rate vs transmit power",
        "scenario": {"rg_min": 1.0, "k_n": 32, "k_m": 32, "epsilon": 0.05},
        "sweep": {"param": "pt_dbm", "values": [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
                  "schemes": ["rsma_ao", "noma_ao", "rsma_fixed_beta", "rsma_random_phase",
                              "noma_random_phase", "no_ris", "rsma_ao_isic", "noma_ao_isic"]},
    },
    "fig6": {
        "doc": "covert rate vs covertness budget",
        "scenario": {"pt_dbm": 25.0, "k_n": 32, "k_m": 32, "rg_min": 0.5},
        "sweep": {"param": "epsilon", "values": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35],
                  "schemes": ["rsma_ao", "noma_ao", "rsma_fixed_beta", "rsma_random_phase",
                              "noma_random_phase", "no_ris", "rsma_ao_isic", "noma_ao_isic"]},
    },
    "fig7": {
        "doc": "covert rate vs Grace's target rate",
        "scenario": {"pt_dbm": 25.0, "k_n": 32, "k_m": 32, "epsilon": 0.05},
        "sweep": {"param": "rg_min", "values": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
                  "schemes": ["rsma_ao", "noma_ao", "rsma_random_phase",
                              "noma_random_phase", "rsma_ao_isic", "noma_ao_isic"]},
    },
    "fig8": {
        "doc": "covert rate vs reflection-group size at fixed K = 64",
        "scenario": {"pt_dbm": 25.0, "k_n": 32, "k_m": 32, "epsilon": 0.1, "rg_min": 1.0},
        "sweep": {"param": "k_n", "values": [8, 16, 24, 32, 40, 48, 56],
                  "schemes": ["rsma_ao", "noma_ao", "rsma_random_phase", "rsma_ao_isic"]},
    },
    "fig10": {
        "doc": "covert rate vs surface position (horizontal coordinate)",
        "scenario": {"pt_dbm": 30.0, "k_n": 32, "k_m": 32, "epsilon": 0.1, "rg_min": 1.0},
        "sweep": {"param": "ris_x", "values": [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0],
                  "schemes": ["rsma_ao", "noma_ao", "rsma_random_phase"]},
    },
}


class _CliError(Exception):
    def __init__(self, code, message):
        self.code = code
        self.message = message
        super().__init__(message)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="starcov",
        description="Covert-rate analysis and optimization for a STAR-RIS-aided RSMA downlink.")
    parser.add_argument("--version", action="version", version=f"starcov {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario config file (key = value lines)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one scenario field (repeatable)")
    common.add_argument("--realizations", type=int, default=None,
                        help="channel realizations to average per sweep point")
    common.add_argument("--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    p_madep = sub.add_parser("madep", parents=[common],
                             help="closed-form vs Monte Carlo MADEP over a grid")
    p_madep.add_argument("--grid", default="a1", choices=["a1", "k_n", "ris_x"],
                         help="parameter axis for the MADEP grid")
    p_madep.add_argument("--values", default=None,
                         help="comma-separated grid values (defaults per axis)")
    p_madep.add_argument("--a1", type=float, default=0.2,
                         help="covert share used when the axis is not a1")
    p_madep.add_argument("--mc-channel", type=int, default=100_000)
    p_madep.add_argument("--mc-noise", type=int, default=10_000)

    sub.add_parser("validate", parents=[common],
                   help="closed-form vs oracle agreement report")

    p_opt = sub.add_parser("optimize", parents=[common], help="single AO run with trace")
    p_opt.add_argument("--scheme", default="rsma_ao",
                       choices=["rsma_ao", "noma_ao"], help="which outer loop to run")

    p_sweep = sub.add_parser("sweep", parents=[common], help="generic parameter sweep")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--schemes", required=True, help="comma-separated scheme names")

    p_fig = sub.add_parser("figure", parents=[common], help="run a named experiment preset")
    p_fig.add_argument("name", nargs="?", default=None,
                       help=f"one of: {', '.join(sorted(FIGURE_PRESETS))}")
    p_fig.add_argument("--values", default=None,
                       help="override the preset's swept values (comma-separated)")
    return parser


def _parse_overrides(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise _CliError(1, f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _load(args, extra=None):
    overrides = dict(extra or {})
    user = _parse_overrides(args.overrides)
    if {"k", "k_n", "k_m"} & user.keys():
        # user-specified element counts replace a preset's split wholesale
        for key in ("k", "k_n", "k_m"):
            overrides.pop(key, None)
    overrides.update(user)
    try:
        scenario = load_scenario(args.config, overrides)
    except FileNotFoundError as exc:
        raise _CliError(2, f"config: {exc}") from None
    except (ValueError, TypeError) as exc:
        raise _CliError(2, f"config: {exc}") from None
    if args.seed is not None:
        scenario = with_updates(scenario, seed=args.seed)
    return scenario


def _write(out_dir, stem, csv_text, manifest):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, stem + ".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    manifest_path = os.path.join(out_dir, stem + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def _manifest(scenario, command, extra=None):
    doc = {
        "tool": "starcov",
        "version": __version__,
        "command": command,
        "scenario": dataclasses.asdict(scenario),
        "seed": scenario.seed,
    }
    if extra:
        doc.update(extra)
    return doc


def _madep_rows(scenario, grid, values, a1_fixed, mc_channel, mc_noise):
    rows = []
    for vi, value in enumerate(values):
        if grid == "a1":
            sc_v, a1 = scenario, float(value)
        elif grid == "k_n":
            sc_v, a1 = with_updates(scenario, k_n=int(value),
                                    k_m=scenario.k - int(value)), a1_fixed
        else:
            sc_v, a1 = with_updates(scenario,
                                    pos_ris=(float(value), scenario.pos_ris[1])), a1_fixed
        losses = derive_path_losses(sc_v)
        ctx = _base_context(sc_v, losses)
        closed = float(madep_manifold(a1, ctx))
        cond = DetectionContext(ctx.delta2 * (1.0 - a1), ctx.delta2, ctx.phi,
                                ctx.lambda_n, ctx.lambda_aw, ctx.sigma2_w)
        rng = np.random.default_rng(np.random.SeedSequence([sc_v.seed, 23, vi]))
        stats = mc_min_dep(cond, mc_channel, mc_noise, rng)
        stderr = math.sqrt(max(stats.madep * (1.0 - stats.madep), 1e-12) / mc_channel)
        rows.append({"param": grid, "value": value, "closed": closed,
                     "mc": stats.madep, "stderr": stderr})
    return rows


def _simple_csv(rows, columns):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                              for c in columns))
    return "\n".join(lines) + "\n"


def cmd_madep(args):
    scenario = _load(args)
    defaults = {
        "a1": [round(0.1 * i, 1) for i in range(1, 10)],
        "k_n": [8, 16, 32, 48, 64, 80, 96, 112, 120],
        "ris_x": [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0],
    }
    values = defaults[args.grid] if args.values is None else \
        [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise _CliError(1, "empty value grid")
    rows = _madep_rows(scenario, args.grid, values, args.a1, args.mc_channel, args.mc_noise)
    csv_text = _simple_csv(rows, ("param", "value", "closed", "mc", "stderr"))
    manifest = _manifest(scenario, "madep", {
        "grid": args.grid, "values": values, "a1": args.a1,
        "mc_channel": args.mc_channel, "mc_noise": args.mc_noise,
    })
    path = _write(args.out, f"madep_{args.grid}", csv_text, manifest)
    print(f"wrote {path}")
    return 0


def cmd_validate(args):
    """Spot checks of the closed forms against their oracles; writes a report CSV."""
    scenario = _load(args)
    losses = derive_path_losses(scenario)
    ctx = _base_context(scenario, losses)
    rng = np.random.default_rng(scenario.seed)
    rows = []
    for a1 in (0.1, 0.3, 0.5, 0.7, 0.9):
        closed = float(madep_manifold(a1, ctx))
        cond = DetectionContext(ctx.delta2 * (1.0 - a1), ctx.delta2, ctx.phi,
                                ctx.lambda_n, ctx.lambda_aw, ctx.sigma2_w)
        stats = mc_min_dep(cond, 100_000, 10_000, rng)
        rows.append({"parameter": f"madep_a1={a1}", "closed_form": closed,
                     "mc_estimate": stats.madep,
                     "mc_stderr": math.sqrt(max(stats.madep * (1 - stats.madep), 1e-12) / 1e5)})
    # threshold optimality against a dense grid
    worst = 0.0
    for _ in range(20):
        h2 = float(rng.exponential(scenario.lambda_aw))
        frac = float(rng.uniform(0.05, 0.95))
        cond = DetectionContext(ctx.delta2 * frac, ctx.delta2, ctx.phi,
                                ctx.lambda_n, ctx.lambda_aw, ctx.sigma2_w, h_aw2=h2)
        eta_star, dep_star = optimal_threshold(cond)
        hi = cond.sigma2_w + cond.delta2 * h2 + 60.0 * cond.delta2 * cond.lambda_n / cond.phi
        grid = np.linspace(0.5 * cond.sigma2_w, hi, 10_000)
        worst = max(worst, dep_star - float(np.min(dep(cond, grid))))
    rows.append({"parameter": "threshold_suboptimality_max", "closed_form": 0.0,
                 "mc_estimate": worst, "mc_stderr": 0.0})
    csv_text = _simple_csv(rows, ("parameter", "closed_form", "mc_estimate", "mc_stderr"))
    path = _write(args.out, "validate", csv_text,
                  _manifest(scenario, "validate"))
    ok = all(abs(r["closed_form"] - r["mc_estimate"]) <= 5e-3 for r in rows[:-1]) \
        and worst <= 1e-6
    print(f"wrote {path}")
    print("validation:", "PASS" if ok else "FAIL")
    return 0 if ok else 3


def cmd_optimize(args):
    scenario = _load(args)
    rng = np.random.default_rng(scenario.seed)
    realization = sample_channels(scenario, rng)
    runner = algorithm2 if args.scheme == "rsma_ao" else algorithm3
    trace = runner(scenario, realization, rng)
    rows = [dict(rec) for rec in trace.records]
    columns = sorted({k for row in rows for k in row}) if rows else ["iter", "r_b"]
    for row in rows:
        for col in columns:
            row.setdefault(col, "")
    csv_text = _simple_csv(rows, tuple(columns))
    extra = {"scheme": args.scheme, "termination": trace.termination}
    if trace.result is not None and trace.result.feasible:
        extra["covert_rate"] = trace.result.covert_rate
        extra["certified"] = trace.result.certified
    path = _write(args.out, f"optimize_{args.scheme}", csv_text,
                  _manifest(scenario, "optimize", extra))
    print(f"wrote {path}")
    if args.verbose and trace.bf_history:
        bf_cols = ("outer", "rho", "objective", "penalized", "penalty_value", "sdp_status")
        bf_csv = _simple_csv(trace.bf_history, bf_cols)
        bf_path = os.path.join(args.out, f"optimize_{args.scheme}_bf_trace.csv")
        with open(bf_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(bf_csv)
        print(f"wrote {bf_path}")
    if trace.result is None or not trace.result.feasible:
        print(f"infeasible: {trace.termination}")
        return 3
    print(f"covert_rate={trace.result.covert_rate!r} ({trace.termination})")
    return 0


def _run_sweep_cmd(scenario, param, values, schemes, realizations, out_dir, stem, extra):
    spec = SweepSpec(param=param, values=values, schemes=schemes,
                     realizations=realizations, seed=scenario.seed)
    rows = run_sweep(spec, scenario)
    csv_text = rows_to_csv(rows)
    manifest = _manifest(scenario, "sweep", dict(extra, sweep=dataclasses.asdict(spec)))
    path = _write(out_dir, stem, csv_text, manifest)
    print(f"wrote {path}")
    feasible_rows = [r for r in rows if r["n"] > 0]
    return 0 if feasible_rows else 3


def cmd_sweep(args):
    scenario = _load(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if not values or not schemes:
        raise _CliError(1, "sweep needs nonempty --values and --schemes")
    bad = [s for s in schemes if s not in RATE_SCHEMES + MADEP_SCHEMES]
    if bad:
        raise _CliError(1, f"unknown schemes: {', '.join(bad)}; "
                           f"valid: {', '.join(RATE_SCHEMES + MADEP_SCHEMES)}")
    if args.param == "k_n":
        values = [int(v) for v in values]
    realizations = args.realizations or 1
    try:
        return _run_sweep_cmd(scenario, args.param, values, schemes, realizations,
                              args.out, f"sweep_{args.param}", {})
    except ValueError as exc:
        raise _CliError(1, str(exc)) from None


def _figure_trace(scenario, preset, out_dir, realizations):
    rows = []
    kn_grid = [k for k in preset["trace_kn"] if k < scenario.k] or [scenario.k_n]
    for pt in preset["trace_pt"]:
        for k_n in kn_grid:
            sc_v = with_updates(scenario, pt_dbm=pt, k_n=k_n, k_m=scenario.k - k_n)
            rng = np.random.default_rng(np.random.SeedSequence([sc_v.seed, int(pt), k_n]))
            realization = sample_channels(sc_v, rng)
            trace = algorithm2(sc_v, realization, rng)
            for rec in trace.records:
                rows.append({"pt_dbm": pt, "k_n": k_n, "iter": rec["iter"],
                             "r_b": rec["r_b"]})
    csv_text = _simple_csv(rows, ("pt_dbm", "k_n", "iter", "r_b"))
    manifest = _manifest(scenario, "figure", {"figure": "fig4", "preset": preset["doc"]})
    return _write(out_dir, "fig4", csv_text, manifest)


def cmd_figure(args):
    if args.name is None or args.name not in FIGURE_PRESETS:
        names = ", ".join(sorted(FIGURE_PRESETS))
        raise _CliError(1, f"unknown figure {args.name!r}; valid names: {names}")
    preset = FIGURE_PRESETS[args.name]
    scenario = _load(args, extra=preset.get("scenario"))
    if args.name == "fig4":
        path = _figure_trace(scenario, preset, args.out, args.realizations or 1)
        print(f"wrote {path}")
        return 0
    sweep = preset["sweep"]
    values = sweep["values"]
    if args.values is not None:
        cast = int if sweep["param"] == "k_n" else float
        values = [cast(v) for v in args.values.split(",") if v.strip()]
        if not values:
            raise _CliError(1, "empty --values grid")
    if set(sweep["schemes"]) <= set(MADEP_SCHEMES):
        rows = _madep_rows(scenario, sweep["param"], values, 0.2, 100_000, 10_000)
        csv_text = _simple_csv(rows, ("param", "value", "closed", "mc", "stderr"))
        manifest = _manifest(scenario, "figure",
                             {"figure": args.name, "preset": preset["doc"]})
        path = _write(args.out, args.name, csv_text, manifest)
        print(f"wrote {path}")
        return 0
    realizations = args.realizations or 3
    return _run_sweep_cmd(scenario, sweep["param"], values, sweep["schemes"],
                          realizations, args.out, args.name,
                          {"figure": args.name, "preset": preset["doc"]})


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "madep": cmd_madep,
        "validate": cmd_validate,
        "optimize": cmd_optimize,
        "sweep": cmd_sweep,
        "figure": cmd_figure,
    }
    try:
        return handlers[args.command](args)
    except _CliError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
