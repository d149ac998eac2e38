import json
import subprocess
import sys

import pytest

from greenfjsp import __version__
from greenfjsp.cli import main
from greenfjsp.model import load_energy_profile
from greenfjsp.report import parse_front

SMALL = "3 2\n2 2 1 3 2 2 1 1 2\n1 1 1 2\n1 2 1 1 2 3\n"
TINY = "1 2\n2 2 1 1 2 2 1 2 1\n"
OUTPUTS = ("front.csv", "front.json", "tradeoffs.json", "gantt.json")


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.fjs"
    p.write_text(SMALL)
    return p


def test_version_via_module():
    out = subprocess.run([sys.executable, "-m", "greenfjsp", "--version"],
                         capture_output=True, text=True, check=True)
    assert __version__ in out.stdout


def test_solve_writes_outputs_and_replay_matches(small, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", str(small), "--synth-seed", "3", "--synth-hours", "6",
                 "--generations", "6", "--population-size", "16", "--seed", "5",
                 "--out", str(a)]) == 0
    for name in OUTPUTS + ("manifest.json",):
        assert (a / name).is_file()
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["generations_completed"] == 6 and manifest["seed"] == 5
    assert main(["replay", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in OUTPUTS:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert parse_front((a / "front.csv").read_text()) == parse_front((a / "front.json").read_text())
    reports = json.loads((a / "tradeoffs.json").read_text())
    assert [(r["axis_a"], r["axis_b"]) for r in reports] == [("ms", "ec"), ("ms", "em"), ("ec", "em")]
    capsys.readouterr()


def test_time_limited_run_replays_identically(small, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", str(small), "--synth-seed", "1", "--synth-hours", "6",
                 "--time-limit", "0.5", "--population-size", "8", "--out", str(a)]) == 0
    m = json.loads((a / "manifest.json").read_text())
    assert m["config"]["runtime_limit_seconds"] == 0.5
    assert 0 <= m["generations_completed"] <= m["config"]["generation_limit"]
    assert main(["replay", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in OUTPUTS:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_config_file(small, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("population_size = 8\ngenerations = 2\nmutation_rate = 0.5\n")
    out = tmp_path / "o"
    assert main(["solve", str(small), "--synth-seed", "2", "--synth-hours", "6",
                 "--config", str(cfg), "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["population_size"] == 8 and m["config"]["mutation_rate"] == 0.5


@pytest.mark.parametrize("body", ["population_size = 10\n", "colour = red\n", "seed = x\n"])
def test_bad_config_exits_2(small, tmp_path, body, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(body)
    assert main(["solve", str(small), "--synth-seed", "2", "--config", str(cfg),
                 "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err


def test_unreadable_instance_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.fjs"
    bad.write_text("1 1\n1 1 3 2\n")
    assert main(["oracle", str(bad), "--synth-seed", "1"]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["oracle", "nope", "--synth-seed", "1"]) == 2


def test_oracle_prints_front_and_refuses_large(tmp_path, capsys):
    p = tmp_path / "tiny.fjs"
    p.write_text(TINY)
    assert main(["oracle", str(p), "--synth-seed", "4", "--synth-hours", "3"]) == 0
    front = parse_front(capsys.readouterr().out)
    assert front and all(o.makespan >= 2 for o in front)
    assert main(["oracle", "mk01", "--synth-seed", "4"]) == 3


def test_emit_milp(tmp_path, capsys):
    p = tmp_path / "tiny.fjs"
    p.write_text(TINY)
    out = tmp_path / "m.lp"
    assert main(["emit-milp", str(p), "--synth-seed", "1", "--synth-hours", "1",
                 "--objective", "ec", "--eps-ms", "4", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("\\") and " obj: psum" in text and "eps_ms" in text
    assert main(["emit-milp", "mk01", "--synth-seed", "1", "--max-variables", "100"]) == 3
    assert "variables" in capsys.readouterr().err


def test_gen_market_and_analyze(tmp_path, capsys):
    csv_path = tmp_path / "market.csv"
    assert main(["gen-market", "--seed", "7", "--hours", "48", "--out", str(csv_path)]) == 0
    assert len(load_energy_profile(csv_path.read_text())) == 192
    front = tmp_path / "front.csv"
    front.write_text("makespan,energy_cost_eur,emissions_g,emissions_t\n42,3965,10,0.00001\n"
                     "44,3885.7,12,0.000012\n")
    assert main(["analyze", str(front), "--deltas", "5", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert round(rep["rows"][0]["savings"], 1) == 2.0
    assert main(["analyze", str(front)]) == 0
    assert "ms -> ec" in capsys.readouterr().out


def test_analyze_rejects_bad_front(tmp_path):
    bad = tmp_path / "f.csv"
    bad.write_text("x,y\n")
    assert main(["analyze", str(bad)]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["solve"])
    assert err.value.code == 2
