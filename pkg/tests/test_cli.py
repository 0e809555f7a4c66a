import json
import subprocess
import sys

import pytest

from rehabkit import io
from rehabkit.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, small_segmenter):
    root = tmp_path_factory.mktemp("cli")
    io.save_model(small_segmenter, root / "seg.model")
    assert main(["synth", "--exercise", "SKE", "--subjects", "5", "--sessions", "2", "--out", str(root / "recs")]) == 0
    assert main(["features", str(root / "recs"), "--segmenter", str(root / "seg.model"), "--matched-only", "--out", str(root / "f.csv")]) == 0
    return root


@pytest.mark.parametrize("command", ["synth", "preprocess", "segment", "features", "train", "evaluate", "pipeline"])
def test_help_lists_defaults(command, capsys):
    with pytest.raises(SystemExit) as info:
        main([command, "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "--seed" in out and "--config" in out and "--out" in out and "default" in out


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--algo", "knn"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1


def test_bad_config_exit_1(tmp_path, workspace):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["evaluate", str(workspace / "f.csv"), "--config", str(cfg), "--out", str(tmp_path / "r.json")]) == 1


def test_data_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5\n")
    bad.with_suffix(".json").write_text("{}")
    assert main(["preprocess", str(bad), "--out", str(tmp_path / "p.csv")]) == 2
    assert "bad.csv:2" in capsys.readouterr().err


def test_model_error_exit_3(tmp_path, workspace, capsys):
    rec = sorted((workspace / "recs").glob("*.csv"))[0]
    code = main(["pipeline", str(rec), "--segmenter", str(workspace / "seg.model"), "--classifier", str(tmp_path / "x.model"), "--out", str(tmp_path / "v.json")])
    assert code == 3
    assert "load_model" in capsys.readouterr().err


def test_train_evaluate_pipeline(tmp_path, workspace):
    assert main(["train", str(workspace / "f.csv"), "--algo", "c45", "--out", str(tmp_path / "c45.model")]) == 0
    assert main(["evaluate", str(workspace / "f.csv"), "--algo", "logistic", "--folds", "5", "--out", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["algorithm"] == "logistic" and report["group_by"] == "subject"
    assert sum(len(v) for v in report["fold_subjects"].values()) == 5
    rec = sorted((workspace / "recs").glob("*.csv"))[0]
    args = ["pipeline", str(rec), "--segmenter", str(workspace / "seg.model"), "--classifier", str(tmp_path / "c45.model")]
    assert main(args + ["--out", str(tmp_path / "v.json"), "--plot", str(tmp_path / "v.svg")]) == 0
    doc = json.loads((tmp_path / "v.json").read_text())
    assert doc["summary"]["detected"] == len(doc["repetitions"])


def test_segment_and_preprocess(tmp_path, workspace):
    rec = sorted((workspace / "recs").glob("*.csv"))[0]
    assert main(["segment", str(rec), "--segmenter", str(workspace / "seg.model"), "--out", str(tmp_path / "s.json"), "--plot", str(tmp_path / "s.svg")]) == 0
    assert len(json.loads((tmp_path / "s.json").read_text())["repetitions"]) == 10
    assert main(["preprocess", str(rec), "--out", str(tmp_path / "p.csv")]) == 0
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "index,AX,AY,AZ,GX,GY,GZ,MAG,PITCH,ROLL"


def test_train_segmenter_from_recordings(tmp_path, workspace):
    assert main(["train", str(workspace / "recs"), "--algo", "segmenter", "--out", str(tmp_path / "s.model")]) == 0
    assert io.load_model(tmp_path / "s.model").algorithm == "hoeffding"


def test_config_overrides(tmp_path, workspace):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"preprocess": {"cutoff_hz": 4.0}, "segmentation": {"expected_reps": 10}, "hyperparameters": {"C": 0.5}}))
    rec = sorted((workspace / "recs").glob("*.csv"))[0]
    assert main(["segment", str(rec), "--segmenter", str(workspace / "seg.model"), "--config", str(cfg), "--out", str(tmp_path / "s.json")]) == 0
    assert main(["train", str(workspace / "f.csv"), "--algo", "smo", "--config", str(cfg), "--out", str(tmp_path / "m.model")]) == 0
    assert '"C":0.5' in (tmp_path / "m.model").read_text()


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rehabkit.cli", "synth", "--reps", "3", "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and (tmp_path / "S01_HS_01.csv").exists()
