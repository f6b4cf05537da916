import csv
import json

import pytest

from ndbell import cli, locc
from ndbell.errors import BoundViolation


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--parallel", "1"])


def test_discriminate_noiseless(tmp_path):
    assert run(tmp_path, "discriminate", "--shots", "10000", "--format", "svg-plot") == 0
    rows = _rows(tmp_path / "discriminate.csv")
    assert [r["target"] for r in rows] == ["PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus", "average"]
    for r in rows:
        assert float(r["p_d"]) == float(r["p_f"]) == 1.0
    assert (tmp_path / "discriminate.svg").read_text().startswith("<svg")
    header = (tmp_path / "discriminate.csv").read_text().splitlines()[0]
    assert header.startswith("# figure:")


def test_discriminate_single_shot(tmp_path):
    assert run(tmp_path, "discriminate", "--shots", "1", "--targets", "PsiMinus", "--noise", "hardware") == 0
    rows = _rows(tmp_path / "discriminate.csv")
    assert rows[0]["shots"] == "1" and rows[0]["p_succ"] in ("0.000000", "1.000000")


def test_discriminate_hardware_averages(tmp_path):
    assert run(tmp_path, "discriminate", "--shots", "10000", "--noise", "hardware") == 0
    avg = _rows(tmp_path / "discriminate.csv")[-1]
    assert abs(float(avg["p_d"]) - 0.796) < 0.02
    assert abs(float(avg["p_f"]) - 0.800) < 0.02


def test_truth_table(tmp_path):
    assert run(tmp_path, "truth-table", "--shots", "2000") == 0
    for r in _rows(tmp_path / "truth_table.csv"):
        assert (float(r["TT"]), float(r["TF"]), float(r["FT"]), float(r["FF"])) == (1, 0, 0, 0)
    assert run(tmp_path, "truth-table", "--shots", "10000", "--noise", "hardware", "--format", "svg-plot") == 0
    avg = _rows(tmp_path / "truth_table.csv")[-1]
    assert abs(float(avg["TT"]) - 0.736) <= 0.03
    assert float(avg["FF"]) > max(float(avg["TF"]), float(avg["FT"]))


def test_sweep_lambda(tmp_path):
    assert run(tmp_path, "sweep-lambda", "--shots", "4000", "--lambda-grid", "0:1:0.25", "--format", "svg-plot") == 0
    rows = _rows(tmp_path / "sweep_lambda.csv")
    assert [float(r["lambda"]) for r in rows] == [0, 0.25, 0.5, 0.75, 1.0]
    assert float(rows[0]["p_succ"]) == 1.0
    assert run(tmp_path, "sweep-lambda", "--shots", "4000", "--lambda-grid", "0", "--noise", "hardware") == 0
    assert float(_rows(tmp_path / "sweep_lambda.csv")[0]["p_succ"]) < 1.0


def test_locc_bound_small_and_baseline(tmp_path, capsys):
    assert run(tmp_path, "locc-bound", "--restarts", "1", "--iterations", "1") == 0
    summary = {r["item"]: float(r["p_win"]) for r in _rows(tmp_path / "locc_summary.csv")}
    assert summary["best"] <= 0.25 + 1e-6
    assert (tmp_path / "locc_campaign.csv").exists()
    capsys.readouterr()
    assert run(tmp_path, "locc-bound", "--baseline-only") == 0
    out = capsys.readouterr().out
    assert "baseline random_guess: 0.25\n" in out and "baseline z_measurement: 0.25\n" in out


def test_locc_bound_violation_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise BoundViolation("p_win=0.3")

    monkeypatch.setattr(cli, "certify_bound", boom)
    assert run(tmp_path, "locc-bound", "--restarts", "1", "--iterations", "1") == 3


def test_event_table_and_session_check(tmp_path):
    assert run(tmp_path, "event-table") == 0
    rows = _rows(tmp_path / "event_table.csv")
    assert len(rows) == 16 and all(r["match"] == "1" for r in rows)
    transcript = tmp_path / "transcript.txt"
    assert cli.main(["session-check", "--shots", "40", "--noise", "hardware", "--out", str(tmp_path),
                     "--transcript", str(transcript)]) == 0
    row = _rows(tmp_path / "session_check.csv")[0]
    assert row["mismatches"] == "0" and row["rejected"] == row["injected_cross_party"]
    assert transcript.read_text().startswith("prepare")


def test_reproducible_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["truth-table", "--shots", "3000", "--noise", "hardware", "--seed", "7", "--out", str(d)]) == 0
        assert cli.main(["sweep-lambda", "--shots", "2000", "--lambda-grid", "0,0.5", "--seed", "7", "--out", str(d)]) == 0
    for name in ("truth_table.csv", "sweep_lambda.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_precedence(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"shots": 50, "seed": 3, "noise": {"p1": 0.01, "p2": 0.02, "readout_flip": 0.0}}))
    args = cli.build_parser().parse_args(["discriminate", "--config", str(cfg_path), "--shots", "70"])
    cfg = cli.resolve_config(args)
    assert cfg.shots == 70 and cfg.seed == 3 and cfg.noise.p2 == 0.02
    args = cli.build_parser().parse_args(["discriminate"])
    cfg = cli.resolve_config(args)
    assert cfg.shots == 10000 and cfg.seed == cli.DEFAULT_SEED


@pytest.mark.parametrize("argv", [
    ["discriminate", "--shots", "0"],
    ["sweep-lambda", "--lambda-grid", "0,1.5"],
    ["discriminate", "--noise", "0.1,2,0"],
    ["discriminate", "--targets", "Chi"],
    ["locc-bound", "--dims", "3"],
    ["discriminate", "--config", "/nonexistent/cfg.json"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main([*argv, "--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_unknown_config_key(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"shotz": 3}')
    assert cli.main(["discriminate", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    out = capsys.readouterr().out
    for name in ("discriminate.csv", "truth_table.csv", "sweep_lambda.csv", "locc_campaign.csv"):
        assert name in out
