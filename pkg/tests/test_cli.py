import csv
import json

import pytest

from osmm import cli


def _run(tmp_path, *extra):
    return cli.main(["run", "--problem", "kelly", "--n", "5", "--num-samples", "300",
                     "--seed", "1", "--out-dir", str(tmp_path), *extra])


def test_run_writes_csv_and_json(tmp_path, capsys):
    assert _run(tmp_path) == 0
    with open(tmp_path / "kelly_seed1_r20_M20.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(cli.CSV_COLUMNS)
    assert rows[0]["iter"] == "0"
    summary = json.loads((tmp_path / "kelly_seed1_r20_M20.json").read_text())
    assert summary["status"] in ("GapConverged", "ResidualConverged")
    assert summary["iters"] == len(rows) - 1
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == summary


def test_config_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tiny run\nrank = 3\nmemory = 2\nmax-iter = 1\n")
    code = _run(tmp_path, "--rank", "10", "--config", str(cfg))
    assert code == 2  # one iteration is not enough to converge
    assert (tmp_path / "kelly_seed1_r3_M2.csv").exists()


@pytest.mark.parametrize("argv", [
    ["run", "--problem", "kelly", "--rank", "x"],
    ["run"],
    ["frobnicate"],
])
def test_bad_arguments_exit_1(argv, capsys):
    assert cli.main(argv) == 1


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert _run(tmp_path, "--config", str(cfg)) == 1
    cfg.write_text("memory = 0\n")
    assert _run(tmp_path, "--config", str(cfg)) == 1
    assert _run(tmp_path, "--config", str(tmp_path / "missing.cfg")) == 1


def test_sweep(tmp_path, capsys):
    code = cli.main(["sweep", "--problem", "kelly", "--n", "4", "--num-samples", "200",
                     "--out-dir", str(tmp_path), "--ranks", "0,2", "--memories", "1"])
    assert code == 0
    with open(tmp_path / "kelly_sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [(r["rank"], r["memory"]) for r in rows] == [("0", "1"), ("2", "1")]
    assert cli.main(["sweep", "--problem", "kelly", "--ranks", "a"]) == 1


@pytest.mark.parametrize("problem,code", [("kelly", 0), ("cvar", 0)])
def test_gradcheck(problem, code, capsys):
    assert cli.main(["gradcheck", "--problem", problem, "--n", "4", "--num-samples", "200",
                     "--points", "3"]) == code
    out = capsys.readouterr().out
    assert "max relative gradient error" in out
    if problem == "cvar":
        assert "exempt" in out


def test_plot_from_csv(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    from osmm import plot

    assert _run(tmp_path) == 0
    out = tmp_path / "run.png"
    plot.main([str(tmp_path / "kelly_seed1_r20_M20.csv"), str(out)])
    assert out.stat().st_size > 0
