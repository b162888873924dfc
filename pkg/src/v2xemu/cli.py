"""Command-line interface.

Subcommands:

* ``run``          emulate one trace, write messages/fixes/metrics
* ``sweep``        grid of culling ranges, write sweep.csv
* ``gen-scenario`` synthesize a grid city and a driving trace
* ``gnss-diag``    stationary receiver statistics for the error model
* ``validate``     schema/invariant check of input files, no run

All randomness flows from one ``--seed`` through named substreams, so a
command line fully reproduces a run. ``--set key=value`` overrides apply
on top of the config file in the order given; ``--seed``/``--workers``
are shorthands applied last. Culling ranges accept ``inf`` (no culling)
and ``diag`` (the building map's bounding-box diagonal).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .config import (
    ConfigError,
    EmulatorConfig,
    apply_overrides,
    config_from_dict,
    config_to_dict,
)
from .geometry import bbox_diagonal
from .gnss import GnssConfig, init_error, stationary_rms, update_error
from .rng import substream
from .scenario import ScenarioError, load_buildings, load_trace, write_buildings, write_trace
from .synth import SynthConfig, generate_synthetic_scenario


def _add_common(p: argparse.ArgumentParser, *, trace=True, buildings=True, out=True) -> None:
    p.add_argument("--config", help="JSON config file (defaults used when omitted)")
    if trace:
        p.add_argument("--trace", required=True, help="trace file, JSON lines")
    if buildings:
        p.add_argument("--buildings", required=True, help="building map, JSON")
    if out:
        p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="base RNG seed (overrides config)")
    p.add_argument("--workers", type=int, help="parallel workers (overrides config)")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="config override, repeatable; applied after --config",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="v2xemu", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="emulate a trace and write outputs")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="grid sweep over culling ranges")
    _add_common(p_sweep)
    p_sweep.add_argument("--rb-list", required=True, help="comma-separated building ranges (m, inf, diag)")
    p_sweep.add_argument("--rv-list", required=True, help="comma-separated vehicle ranges (m, inf, diag)")

    p_gen = sub.add_parser("gen-scenario", help="generate a synthetic grid city + trace")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--blocks", default="10", help="N or NXxNY city blocks (default 10)")
    p_gen.add_argument("--block-size", type=float, default=80.0)
    p_gen.add_argument("--street-width", type=float, default=20.0)
    p_gen.add_argument("--vehicles", type=int, default=50, help="fleet size including the ego")
    p_gen.add_argument("--duration", type=float, default=60.0, help="seconds")
    p_gen.add_argument("--step-period", type=float, default=0.1, help="seconds per step")
    p_gen.add_argument("--truck-fraction", type=float, default=0.1)
    p_gen.add_argument("--seed", type=int, default=0)

    p_diag = sub.add_parser("gnss-diag", help="stationary GNSS error statistics")
    p_diag.add_argument("--config", help="JSON config file for sigma/t_corr")
    p_diag.add_argument("--duration", type=float, default=2000.0, help="seconds (>= 100 * t_corr)")
    p_diag.add_argument("--step", type=float, default=1.0, help="seconds per sample")
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE"
    )

    p_val = sub.add_parser("validate", help="check input files without running")
    p_val.add_argument("--trace", help="trace file to validate")
    p_val.add_argument("--buildings", help="building map to validate")

    return parser


def _load_config(args, diagonal: float | None = None) -> EmulatorConfig:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    data = apply_overrides(data, args.overrides)
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        data["worker_count"] = args.workers
    for key in ("r_b", "r_v"):
        if isinstance(data.get(key), str) and data[key].lower() in ("diag", "diagonal"):
            if diagonal is None:
                raise ConfigError(f"{key}=diag needs a building map")
            data[key] = diagonal
    return config_from_dict(data)


def _parse_range_token(tok: str, diagonal: float) -> float:
    tok = tok.strip().lower()
    if tok in ("inf", "infinity"):
        return math.inf
    if tok in ("diag", "diagonal"):
        return diagonal
    return float(tok)


def _cmd_run(args) -> int:
    buildings = load_buildings(args.buildings)
    cfg = _load_config(args, diagonal=bbox_diagonal(buildings))
    summary = pipeline.run(cfg, buildings, load_trace(args.trace), args.out)
    print(
        f"run: {summary.steps} steps, {summary.messages} messages, "
        f"{summary.over_budget_steps} over budget, "
        f"mean delay {summary.mean_wall_delay * 1e3:.2f} ms, "
        f"max {summary.max_wall_delay * 1e3:.2f} ms"
    )
    return 0


def _cmd_sweep(args) -> int:
    buildings = load_buildings(args.buildings)
    diagonal = bbox_diagonal(buildings)
    cfg = _load_config(args, diagonal=diagonal)
    rb = [_parse_range_token(t, diagonal) for t in args.rb_list.split(",") if t.strip()]
    rv = [_parse_range_token(t, diagonal) for t in args.rv_list.split(",") if t.strip()]
    rows = pipeline.sweep(cfg, buildings, load_trace(args.trace), rb, rv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_sweep_csv(out / "sweep.csv", rows)
    with open(out / "effective_config.json", "w", encoding="utf-8") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
    for row in rows:
        print(
            f"rb={row.rb:g} rv={row.rv:g}: top50 {row.mean_delay_top50 * 1e3:.2f} ms, "
            f"missed NLOSb {row.nlosb_missed}/{row.total_reference_nlosb}, "
            f"delivered diff {row.delivered_diff}"
        )
    return 0


def _cmd_gen_scenario(args) -> int:
    if "x" in args.blocks.lower():
        nx, ny = args.blocks.lower().split("x", 1)
        blocks: int | tuple[int, int] = (int(nx), int(ny))
    else:
        blocks = int(args.blocks)
    cfg = SynthConfig(
        blocks=blocks,
        block_size=args.block_size,
        street_width=args.street_width,
        vehicle_count=args.vehicles,
        duration_s=args.duration,
        step_period=args.step_period,
        seed=args.seed,
        truck_fraction=args.truck_fraction,
    )
    buildings, trace = generate_synthetic_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_buildings(out / "buildings.json", buildings)
    steps = write_trace(out / "trace.jsonl", trace)
    print(f"gen-scenario: {len(buildings)} buildings, {cfg.vehicle_count} vehicles, {steps} steps")
    return 0


def _cmd_gnss_diag(args) -> int:
    data: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            data = json.load(f)
    data = apply_overrides(data, args.overrides)
    cfg = GnssConfig(
        sigma=float(data.get("sigma", GnssConfig.sigma)),
        t_corr=float(data.get("t_corr", GnssConfig.t_corr)),
    )
    rms = stationary_rms(cfg, args.duration, args.step, substream(args.seed, "gnss-diag", "rms"))
    print(f"empirical RMS {rms:.3f} m (stationary value {cfg.sigma:.3f} m)")

    n = int(args.duration / args.step)
    rng = substream(args.seed, "gnss-diag", "acf")
    state = init_error(cfg, rng)
    mu = np.empty(n)
    for i in range(n):
        state = update_error(state, args.step, cfg, rng)
        mu[i] = state.mu
    mu -= mu.mean()
    var = float(mu @ mu) / n
    print("lag  empirical  model")
    for k in (1, 5, 10, 30):
        if k >= n:
            break
        emp = float(mu[:-k] @ mu[k:]) / ((n - k) * var)
        print(f"{k:>3}  {emp:>9.4f}  {math.exp(-k * args.step / cfg.t_corr):>6.4f}")
    return 0


def _cmd_validate(args) -> int:
    if not args.trace and not args.buildings:
        print("validate: give --trace and/or --buildings", file=sys.stderr)
        return 2
    if args.buildings:
        buildings = load_buildings(args.buildings)
        print(f"buildings: OK ({len(buildings)} polygons)")
    if args.trace:
        steps = 0
        for _ in load_trace(args.trace):
            steps += 1
        print(f"trace: OK ({steps} steps)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "gen-scenario": _cmd_gen_scenario,
        "gnss-diag": _cmd_gnss_diag,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ScenarioError, ConfigError, OSError, ValueError) as exc:
        print(f"v2xemu {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
