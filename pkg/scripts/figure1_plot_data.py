#!/usr/bin/env python3
"""Intensity path of the Hawkes process with mu(t) = 0.3 + 0.2 exp(-0.1 t)
and constant kernel phi0 = 0.2, written as CSV (t, lambda, N).

    python3 scripts/figure1_plot_data.py --horizon 30 --seed 1 --out fig1.csv
"""
import argparse
from dataclasses import dataclass
from pathlib import Path

from poisson_additive.cli import plot_rows
from poisson_additive.io import fmt


@dataclass(frozen=True)
class Figure1Config:
    mu: tuple = (0.3, 0.2, 0.1)
    phi0: float = 0.2
    horizon: float = 30.0
    seed: int = 1
    step: float = 0.01


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--horizon", type=float, default=Figure1Config.horizon)
    ap.add_argument("--seed", type=int, default=Figure1Config.seed)
    ap.add_argument("--step", type=float, default=Figure1Config.step)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    cfg = Figure1Config(horizon=args.horizon, seed=args.seed, step=args.step)

    rows, seq = plot_rows(cfg.mu, cfg.phi0, cfg.horizon, cfg.seed, cfg.step)
    text = "t,lambda,N\n" + "".join(f"{fmt(t)},{fmt(lam)},{n}\n" for t, lam, n in rows)
    if args.out:
        args.out.write_text(text)
        print(f"{len(seq)} events, {len(rows)} rows -> {args.out}")
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
