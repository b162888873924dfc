#!/usr/bin/env python3
"""Check the positioning-error process against its target statistics.

Simulates a long stationary receiver, then compares the empirical error
magnitude RMS, the autocorrelation decay, and the frequency of large
error excursions against the configured process parameters. Useful when
retuning sigma / t_corr for a different GNSS quality class.

Produces (optional):
  --csv <path>   per-step error series (t, mu, theta, east, north)

Usage:
  python3 scripts/gnss_calibration.py --duration 100000 --step 1
  python3 scripts/gnss_calibration.py --sigma 1.5 --t-corr 30 --seed 7
"""

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from v2xemu.gnss import GnssConfig, error_offset, init_error, update_error
from v2xemu.rng import substream


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=2.32, help="error magnitude std [m]")
    ap.add_argument("--t-corr", type=float, default=10.0, help="correlation time [s]")
    ap.add_argument("--duration", type=float, default=100_000.0, help="simulated span [s]")
    ap.add_argument("--step", type=float, default=1.0, help="sample period [s]")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--window", type=float, default=600.0, help="excursion window [s]")
    ap.add_argument("--peak", type=float, default=5.0, help="excursion threshold [m]")
    ap.add_argument("--csv", default=None, help="write the raw series here")
    args = ap.parse_args(argv)

    cfg = GnssConfig(sigma=args.sigma, t_corr=args.t_corr)
    rng = substream(args.seed, "gnss-calibration")
    n = int(round(args.duration / args.step))
    if n < 1000:
        ap.error("need at least 1000 samples for stable statistics")

    state = init_error(cfg, rng)
    mu = np.empty(n)
    rows = []
    for i in range(n):
        state = update_error(state, args.step, cfg, rng)
        mu[i] = state.mu
        if args.csv:
            east, north = error_offset(state)
            rows.append((i * args.step, state.mu, state.theta, east, north))

    rms = float(np.sqrt(np.mean(mu**2)))
    print(f"samples: {n} at {args.step} s")
    print(f"empirical RMS {rms:.3f} m  (target sigma {cfg.sigma} m)")
    print(f"empirical mean {float(mu.mean()):+.3f} m  (target 0)")

    centered = mu - mu.mean()
    var = float(np.dot(centered, centered))
    print("\n  lag [s]   empirical   exp(-lag/t_corr)")
    for lag_s in (1, 2, 5, 10, 20, 30, 60):
        k = int(round(lag_s / args.step))
        if k < 1 or k >= n:
            continue
        emp = float(np.dot(centered[:-k], centered[k:])) / var
        print(f"  {lag_s:7d}   {emp:9.4f}   {math.exp(-lag_s / cfg.t_corr):16.4f}")

    w = int(round(args.window / args.step))
    if w >= 1 and n >= w:
        peaks = np.abs(mu[: (n // w) * w]).reshape(-1, w).max(axis=1)
        frac = float(np.mean(peaks > args.peak))
        print(
            f"\n{args.window:.0f} s windows with |error| peak > {args.peak} m: "
            f"{frac:.1%} of {len(peaks)}"
        )

    if args.csv:
        path = Path(args.csv)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "mu", "theta", "east", "north"])
            writer.writerows(rows)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
