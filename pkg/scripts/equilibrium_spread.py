#!/usr/bin/env python3
"""How far apart equilibria from different starting points land, per game and user count.

Below capacity (K <= N) every start reaches the same powers.  Above it the
code games can settle on different code sets, so powers (and for linear
receivers, SINRs) may differ between starts.
"""
import argparse

from cdma_games.equilibrium import GameKind, equilibrium_uniqueness_probe
from cdma_games.model import SystemConfig
from cdma_games.montecarlo import TrialSpec, sample_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenarios", type=int, default=10)
    ap.add_argument("--starts", type=int, default=5)
    ap.add_argument("--k", type=int, nargs="+", default=[5, 7, 10, 14])
    args = ap.parse_args()
    cfg = SystemConfig()
    print(f"{'game':>12} {'K':>3} {'max power gap':>14} {'max sinr gap':>13}")
    for kind in GameKind:
        for K in args.k:
            pg = sg = 0.0
            for i in range(args.scenarios):
                sc = sample_scenario(TrialSpec(50_000 + i, K, cfg))
                rep = equilibrium_uniqueness_probe(sc, cfg, kind, n_starts=args.starts, seed=i, strict=False)
                pg, sg = max(pg, rep.max_power_gap), max(sg, rep.max_sinr_gap)
            print(f"{kind.value:>12} {K:>3} {pg:14.3e} {sg:13.3e}")


if __name__ == "__main__":
    main()
