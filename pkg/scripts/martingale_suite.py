#!/usr/bin/env python3
"""Seed sweep of the martingale residual test: correct compensators should
pass at roughly the nominal rate, scaled ones should be rejected.

    python3 scripts/martingale_suite.py --seeds 20 --paths 10000
"""
import argparse
from dataclasses import dataclass

from poisson_additive import (
    CompensatorPath,
    ConstantRate,
    DeterministicBaseline,
    HawkesConst,
    martingale_residual_test,
    simulate_ensemble,
)


@dataclass(frozen=True)
class SuiteConfig:
    horizon: float = 10.0
    pairs: tuple = ((5.0, 10.0),)
    n_paths: int = 10_000
    n_seeds: int = 20
    scale: float = 2.0


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=SuiteConfig.n_seeds)
    ap.add_argument("--paths", type=int, default=SuiteConfig.n_paths)
    ap.add_argument("--scale", type=float, default=SuiteConfig.scale)
    args = ap.parse_args()
    cfg = SuiteConfig(n_paths=args.paths, n_seeds=args.seeds, scale=args.scale)

    hawkes = HawkesConst(DeterministicBaseline(0.3, 0.2, 0.1), 0.2)
    unit = CompensatorPath.linear(1.0, cfg.horizon)
    tally = {"poisson": 0, "hawkes": 0, "scaled": 0}
    for seed in range(cfg.n_seeds):
        ep = simulate_ensemble(ConstantRate(1.0), cfg.horizon, cfg.n_paths, seed)
        eh = simulate_ensemble(hawkes, cfg.horizon, cfg.n_paths, 10_000 + seed)
        tally["poisson"] += martingale_residual_test(ep, unit, cfg.pairs).passed
        tally["hawkes"] += martingale_residual_test(eh, hawkes, cfg.pairs).passed
        tally["scaled"] += martingale_residual_test(ep, unit.scaled(cfg.scale), cfg.pairs).passed
    for name, count in tally.items():
        print(f"{name:8s} passed {count}/{cfg.n_seeds}")


if __name__ == "__main__":
    main()
