#!/usr/bin/env python3
"""Monte Carlo sweep over user counts for all four games, written as CSV plus a plot script.

    python scripts/reproduce_figures.py --out results/ --trials 2000 --workers 4
"""
import argparse
import logging
import time
from pathlib import Path

from cdma_games.cli import ExperimentPlan, emit_csv, emit_plot_script, write_manifest
from cdma_games.equilibrium import GameKind
from cdma_games.montecarlo import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k-min", type=int, default=2)
    ap.add_argument("--k-max", type=int, default=16)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    plan = ExperimentPlan(
        K_list=tuple(range(args.k_min, args.k_max + 1)), games=tuple(GameKind), trials=args.trials, seed=args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    stats = run_experiment(
        plan.K_list, plan.games, plan.trials, plan.seed, plan.config,
        cell_min=plan.cell_min, cell_max=plan.cell_max, workers=args.workers,
    )
    elapsed = time.perf_counter() - t0
    emit_csv(stats, out)
    emit_plot_script(stats, out)
    write_manifest(plan, out, None, elapsed)
    print(f"{len(stats.cells)} cells in {elapsed:.0f} s -> {out}/ (run {out}/plot_results.py for the charts)")


if __name__ == "__main__":
    main()
