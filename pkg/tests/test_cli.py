import csv
import io
import os
import subprocess
import sys

import pytest

from cdma_games.cli import CSV_COLUMNS, csv_text, emit_plot_script, format_config, main, parse_config
from cdma_games.equilibrium import GameKind
from cdma_games.errors import InvalidValue, ParseError, UnknownKey
from cdma_games.model import SystemConfig
from cdma_games.montecarlo import run_experiment


def test_empty_config_gives_defaults():
    plan = parse_config("")
    assert plan.config == SystemConfig()
    assert plan.config.pmax_dbw == pytest.approx(25.0)
    assert plan.K_list == tuple(range(2, 17))
    assert plan.games == tuple(GameKind)
    assert (plan.trials, plan.cell_min, plan.cell_max) == (2000, 10.0, 500.0)


def test_config_overrides_and_comments():
    plan = parse_config("# comment\ntrials = 10000  # more\nK = 2..4, 9\ngames = SicCodes, MmseBaseline\n")
    assert plan.trials == 10000
    assert plan.K_list == (2, 3, 4, 9)
    assert plan.games == (GameKind.SIC_CODES, GameKind.MMSE_BASELINE)
    assert plan.config == SystemConfig()


def test_config_errors():
    with pytest.raises(InvalidValue):
        parse_config("packet_len = 1")
    with pytest.raises(UnknownKey) as err:
        parse_config("\nbogus = 3")
    assert err.value.line == 2 and err.value.key == "bogus"
    with pytest.raises(ParseError):
        parse_config("trials 5")
    with pytest.raises(ParseError):
        parse_config("rate = fast")


def test_config_round_trip():
    plan = parse_config("pmax_dbw = 23.5\nrate = 2e6\nK = 3, 5\nseed = 42\n")
    assert parse_config(format_config(plan, ["note"])) == plan


@pytest.fixture(scope="module")
def small_stats():
    return run_experiment([2, 3], [GameKind.MMSE_BASELINE, GameKind.SIC_POWER], 3, 1, SystemConfig())


def test_csv_schema(small_stats):
    text = csv_text(small_stats)
    assert text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 4
    assert all(len(r) == 12 for r in rows)
    assert csv_text(small_stats) == text


def test_plot_script_reads_only_relative_csv(small_stats, tmp_path):
    path = emit_plot_script(small_stats, tmp_path)
    src = path.read_text()
    compile(src, str(path), "exec")
    assert '"results.csv"' in src and str(tmp_path) not in src


def test_target_sinr_command(capsys):
    assert main(["target-sinr", "--m", "120"]) == 0
    value, db = capsys.readouterr().out.split("\t")
    assert float(value) == pytest.approx(6.689, abs=1e-3)
    assert float(db.split()[0]) == pytest.approx(8.25, abs=0.01)


def test_single_command(capsys):
    assert main(["single", "--k", "3", "--game", "SicPower", "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert "converged True" in out and len(out.strip().splitlines()) == 3 + 3


def test_bad_config_exit_status(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("nonsense = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_run_and_manifest_reproduce(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("K = 2, 4\ntrials = 3\ngames = MmseBaseline, SicCodes\n")
    env = dict(os.environ, CDMA_GAME_THREADS="1")
    run = [sys.executable, "-m", "cdma_games", "run"]
    subprocess.run(run + ["--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "5"], check=True, env=env, capture_output=True)
    manifest = tmp_path / "a" / "manifest.txt"
    assert "seed = 5" in manifest.read_text()
    subprocess.run(run + ["--config", str(manifest), "--out", str(tmp_path / "b")], check=True, env=env, capture_output=True)
    first = (tmp_path / "a" / "results.csv").read_bytes()
    assert first == (tmp_path / "b" / "results.csv").read_bytes()
    assert (tmp_path / "a" / "plot_results.py").exists()
