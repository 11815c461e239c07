#!/usr/bin/env python3
"""Headline comparisons at K = 7 and K = 14 on N = 7 chips.

Prints the SIC-with-codes over baseline utility ratio and power saving, the
linear/SIC agreement of the code games below capacity, and the crossing of
the MMSE code game with the SIC power game when the cell is oversaturated.
"""
import argparse

from cdma_games.equilibrium import GameKind
from cdma_games.model import SystemConfig
from cdma_games.montecarlo import run_experiment

MB, MC, SP, SC = GameKind


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = SystemConfig()

    stats = run_experiment((7, 14), tuple(GameKind), args.trials, 0, cfg, workers=args.workers)
    for c in stats.cells:
        print(
            f"{c.game.value:>12} K={c.K:>2} trials={c.trials:>5} utility={c.mean_utility:.4g}+-{c.se_utility:.2g}"
            f" power={c.mean_power_dbw:.3f} dBW sinr={c.mean_sinr:.4f} at_pmax={c.frac_pmax:.3f}"
        )
    sc, mb = stats.cell(SC, 7), stats.cell(MB, 7)
    print(f"K=7 SicCodes/MmseBaseline utility ratio {sc.mean_utility / mb.mean_utility:.3f}")
    print(f"K=7 power saving {mb.mean_power_dbw - sc.mean_power_dbw:.3f} dB")
    print(f"K=7 MmseCodes - SicCodes utility {stats.cell(MC, 7).mean_utility - sc.mean_utility:.3g}")
    print(
        f"K=14 SicPower {stats.cell(SP, 14).mean_utility:.4g} vs MmseCodes {stats.cell(MC, 14).mean_utility:.4g}"
    )


if __name__ == "__main__":
    main()
