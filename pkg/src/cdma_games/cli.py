"""Command-line front end: config parsing, experiment runs and result files.

Subcommands::

    run --config PATH --out DIR [--threads N] [--seed S]
    single --k K --game TAG --seed S [--config PATH]
    target-sinr --m M
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .equilibrium import GameKind, run_game
from .errors import CdmaGameError, InvalidValue, ParseError, UnknownKey
from .model import SystemConfig
from .montecarlo import CELL_MAX, CELL_MIN, AggregateStats, TrialSpec, run_experiment, sample_scenario
from .utilityfn import target_sinr

log = logging.getLogger("cdma_games")

THREADS_ENV = "CDMA_GAME_THREADS"
CSV_NAME = "results.csv"
PLOT_NAME = "plot_results.py"
MANIFEST_NAME = "manifest.txt"
CSV_COLUMNS = (
    "game",
    "K",
    "trials",
    "mean_utility_bpj",
    "se_utility",
    "mean_power_w",
    "mean_power_dbw",
    "se_power",
    "mean_sinr",
    "mean_sinr_db",
    "frac_pmax",
    "dropped_trials",
)


@dataclass(frozen=True)
class ExperimentPlan:
    config: SystemConfig = field(default_factory=SystemConfig)
    K_list: tuple = tuple(range(2, 17))
    games: tuple = tuple(GameKind)
    trials: int = 2000
    seed: int = 0
    cell_min: float = CELL_MIN
    cell_max: float = CELL_MAX


# ---------------------------------------------------------------- config text

_INT_KEYS = {"processing_gain", "packet_len", "info_len", "max_iters_power", "max_iters_tmse", "trials", "seed"}
_FLOAT_KEYS = {"rate", "noise_psd", "pmax_dbw", "tol_power", "tol_tmse", "cell_min", "cell_max"}
_LIST_KEYS = {"K", "games"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS


def _parse_int(text, key, line):
    try:
        return int(text, 0)
    except ValueError:
        raise ParseError(f"{key} expects an integer, got {text!r}", line=line, key=key) from None


def _parse_float(text, key, line):
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"{key} expects a number, got {text!r}", line=line, key=key) from None
    if not math.isfinite(x):
        raise ParseError(f"{key} must be finite", line=line, key=key)
    return x


def _parse_k_list(text, line):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            lo, hi = _parse_int(a.strip(), "K", line), _parse_int(b.strip(), "K", line)
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(_parse_int(part, "K", line))
    if not out or min(out) < 1:
        raise InvalidValue("K must list positive user counts", key="K")
    return tuple(out)


def _parse_games(text):
    games = tuple(GameKind.from_tag(t.strip()) for t in text.split(",") if t.strip())
    if not games:
        raise InvalidValue("games must not be empty", key="games")
    return games


def parse_config(text: str) -> ExperimentPlan:
    """Read ``key = value`` lines; ``#`` starts a comment.  Missing keys keep their defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise UnknownKey(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", line=lineno, key=key)
        if key in _INT_KEYS:
            values[key] = _parse_int(val, key, lineno)
        elif key in _FLOAT_KEYS:
            values[key] = _parse_float(val, key, lineno)
        elif key == "K":
            values[key] = _parse_k_list(val, lineno)
        else:
            values[key] = _parse_games(val)

    cfg_names = {f.name for f in fields(SystemConfig)}
    cfg_kwargs = {k: v for k, v in values.items() if k in cfg_names}
    if "pmax_dbw" in values:
        cfg_kwargs["pmax"] = 10.0 ** (values["pmax_dbw"] / 10.0)
    config = SystemConfig(**cfg_kwargs)
    plan = ExperimentPlan(config=config)
    plan_kwargs = {
        name: values[key]
        for key, name in (("K", "K_list"), ("games", "games"), ("trials", "trials"), ("seed", "seed"),
                          ("cell_min", "cell_min"), ("cell_max", "cell_max"))
        if key in values
    }
    plan = replace(plan, **plan_kwargs)
    if plan.trials < 1:
        raise InvalidValue("trials must be >= 1", key="trials")
    if plan.seed < 0:
        raise InvalidValue("seed must be non-negative", key="seed")
    if not 0 < plan.cell_min < plan.cell_max:
        raise InvalidValue("need 0 < cell_min < cell_max", key="cell_min")
    return plan


def format_config(plan: ExperimentPlan, comments=()) -> str:
    """Inverse of :func:`parse_config`; floats are written with full precision."""
    c = plan.config
    lines = [f"# {line}" for line in comments]
    lines += [
        f"processing_gain = {c.processing_gain}",
        f"packet_len = {c.packet_len}",
        f"info_len = {c.info_len}",
        f"rate = {c.rate!r}",
        f"noise_psd = {c.noise_psd!r}",
        f"pmax_dbw = {c.pmax_dbw!r}",
        f"tol_power = {c.tol_power!r}",
        f"tol_tmse = {c.tol_tmse!r}",
        f"max_iters_power = {c.max_iters_power}",
        f"max_iters_tmse = {c.max_iters_tmse}",
        f"cell_min = {plan.cell_min!r}",
        f"cell_max = {plan.cell_max!r}",
        f"trials = {plan.trials}",
        f"seed = {plan.seed}",
        "K = " + ", ".join(str(k) for k in plan.K_list),
        "games = " + ", ".join(g.value for g in plan.games),
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- outputs


def csv_text(stats: AggregateStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in sorted(stats.cells, key=lambda c: (list(GameKind).index(c.game), c.K)):
        w.writerow([
            c.game.value, c.K, c.trials,
            repr(c.mean_utility), repr(c.se_utility),
            repr(c.mean_power_w), repr(c.mean_power_dbw), repr(c.se_power),
            repr(c.mean_sinr), repr(c.mean_sinr_db),
            repr(c.frac_pmax), c.dropped_trials,
        ])
    return buf.getvalue()


def emit_csv(stats: AggregateStats, out_dir) -> Path:
    if not stats.cells:
        raise InvalidValue("no statistics to write", key="stats")
    path = Path(out_dir) / CSV_NAME
    path.write_text(csv_text(stats))
    return path


PLOT_TEMPLATE = '''"""Plot the equilibrium statistics in {csv} (needs matplotlib)."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
PANELS = [
    ("mean_utility_bpj", "average utility [bits/J]", "utility_vs_K.png", True),
    ("mean_power_dbw", "average transmit power [dBW]", "power_vs_K.png", False),
    ("mean_sinr_db", "average output SINR [dB]", "sinr_vs_K.png", False),
    ("frac_pmax", "fraction of users at maximum power", "pmax_fraction_vs_K.png", False),
]


def main():
    curves = defaultdict(list)
    with open(HERE / "{csv}", newline="") as fh:
        for row in csv.DictReader(fh):
            curves[row["game"]].append(row)
    for column, label, name, log_scale in PANELS:
        fig, ax = plt.subplots(figsize=(6, 4))
        for game, rows in curves.items():
            rows = sorted(rows, key=lambda r: int(r["K"]))
            ax.plot([int(r["K"]) for r in rows], [float(r[column]) for r in rows], marker="o", label=game)
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("number of users K")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(HERE / name, dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main()
'''


def emit_plot_script(stats: AggregateStats, out_dir) -> Path:
    """Write a matplotlib script that reads the CSV next to it and draws four charts."""
    if not stats.cells:
        raise InvalidValue("no statistics to plot", key="stats")
    path = Path(out_dir) / PLOT_NAME
    path.write_text(PLOT_TEMPLATE.format(csv=CSV_NAME))
    return path


def write_manifest(plan: ExperimentPlan, out_dir, config_path, elapsed: float) -> Path:
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    notes = [
        "run manifest; feed back through `run --config` to reproduce results.csv",
        f"tool_version: cdma-games {__version__}",
        f"config_path: {config_path}",
        f"output_dir: {Path(out_dir).resolve()}",
        f"finished: {stamp}",
        f"wall_clock_s: {elapsed:.3f}",
    ]
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text(format_config(plan, notes))
    return path


# ---------------------------------------------------------------- commands


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidValue(f"{THREADS_ENV} must be an integer", key=THREADS_ENV) from None
    return 1


def cmd_run(args) -> int:
    text = Path(args.config).read_text() if args.config else ""
    plan = parse_config(text)
    if args.seed is not None:
        plan = replace(plan, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    stats = run_experiment(
        plan.K_list, plan.games, plan.trials, plan.seed, plan.config,
        cell_min=plan.cell_min, cell_max=plan.cell_max, workers=_threads(args.threads),
    )
    emit_csv(stats, out)
    emit_plot_script(stats, out)
    write_manifest(plan, out, args.config, time.perf_counter() - t0)
    print(csv_text(stats), end="")
    return 0


def cmd_single(args) -> int:
    plan = parse_config(Path(args.config).read_text() if args.config else "")
    kind = GameKind.from_tag(args.game)
    sc = sample_scenario(TrialSpec(args.seed, args.k, plan.config, plan.cell_min, plan.cell_max))
    out = run_game(sc, plan.config, kind)
    gbar = target_sinr(plan.config.packet_len)
    print(f"game {kind.value}  K={args.k}  seed={args.seed}  target SINR {gbar:.6f}")
    print(f"outer iterations {out.outer_iterations}  converged {out.converged}")
    print(f"{'user':>4} {'dist_m':>8} {'gain':>11} {'power_w':>11} {'dBW':>8} {'sinr':>9} {'utility_bpj':>12} sat")
    for k in range(args.k):
        print(
            f"{k:>4} {sc.distances[k]:8.2f} {sc.gains[k]:11.4e} {out.powers[k]:11.4e} "
            f"{10 * np.log10(out.powers[k]):8.3f} {out.sinr[k]:9.5f} {out.utility[k]:12.5e} "
            f"{'*' if out.saturated[k] else ''}"
        )
    return 0 if out.converged else 1


def cmd_target_sinr(args) -> int:
    g = target_sinr(args.m)
    print(f"{g:.6f}\t{10 * math.log10(g):.4f} dB")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdma-games", description="Energy-efficient power/code games in uplink CDMA.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress and dropped trials")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo sweep over K and games")
    run.add_argument("--config", help="key = value configuration file (defaults if omitted)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--threads", type=int, help=f"worker processes (fallback: ${THREADS_ENV}, else 1)")
    run.add_argument("--seed", type=int, help="override the base seed")
    run.set_defaults(func=cmd_run)

    single = sub.add_parser("single", help="one scenario, one game, per-user table")
    single.add_argument("--k", type=int, required=True)
    single.add_argument("--game", required=True, help=", ".join(g.value for g in GameKind))
    single.add_argument("--seed", type=int, required=True)
    single.add_argument("--config")
    single.set_defaults(func=cmd_single)

    ts = sub.add_parser("target-sinr", help="utility-maximizing SINR for packet length M")
    ts.add_argument("--m", type=int, required=True)
    ts.set_defaults(func=cmd_target_sinr)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CdmaGameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, (ParseError, InvalidValue)) else 1


if __name__ == "__main__":
    sys.exit(main())
