import json
import os

import pytest

from dynfusion import ConfigError
from dynfusion.cli import main
from dynfusion.config import ConfigFileError, bundled_config_path, load_config, parse_config
from dynfusion.traces import write_trace
from dynfusion.core import ScoreRecord

SMALL = """\
[experiment]
seed = 7
trials = 300
train_trials = 200
grid_step = 0.1
approaches = max, sum, cwma, our_1x, our_2x

[context A]
window_ms = 5000

[context B]
window_ms = 8000

[classifier f]
time_ms = 300
eer.A = 0.05
eer.B = 0.2

[classifier v]
time_ms = 700
eer.A = 0.15
eer.B = 0.08

[scenario]
duration_ms = 20000
segment = 0, 10000, A, genuine
segment = 10000, 20000, B, impostor
"""


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_bundled_configs_parse():
    uni = load_config("unimodal")
    assert list(uni.contexts) == ["SF", "P"]
    assert uni.classifiers["c1"].eer == {"SF": 0.027, "P": 0.112}
    assert uni.classifiers["c2"].eer == {"SF": 0.204, "P": 0.092}
    multi = load_config("multimodal")
    assert len(multi.contexts) == 4
    assert multi.classifiers["c3"].eer["SF+LN"] == 0.073
    assert multi.classifiers["c3"].eer["P+HN"] == 0.177
    assert "our_3x" in multi.approaches
    assert multi.scenario is not None
    assert bundled_config_path("nope") is None


def test_small_config_fields():
    cfg = parse_config(SMALL)
    assert cfg.seed == 7 and cfg.trials == 300 and cfg.grid_step == 0.1
    assert cfg.contexts == {"A": 5000, "B": 8000}
    assert cfg.scenario.duration == 20000
    assert [s.genuine for s in cfg.scenario.segments] == [True, False]


def test_bad_threshold_names_field_and_line():
    text = SMALL.replace("seed = 7", "seed = 7\nth_p = 1.5")
    with pytest.raises(ConfigFileError) as err:
        parse_config(text, "exp.cfg")
    msg = str(err.value)
    assert "th_p" in msg and "exp.cfg:3" in msg
    assert err.value.line == 3


@pytest.mark.parametrize("edit, needle", [
    (("eer.B = 0.2", "eer.B = 0.6"), "eer.B"),
    (("eer.B = 0.2", ""), "eer.B"),
    (("window_ms = 5000", "window_ms = -1"), "window_ms"),
    (("grid_step = 0.1", "grid_step = 0.3"), "grid_step"),
    (("approaches = max", "approaches = median"), "approaches"),
    (("time_ms = 300", "time_ms = fast"), "time_ms"),
    (("[context B]", "[zone B]"), "unknown section"),
    (("segment = 10000, 20000, B, impostor", "segment = 10000, 20000, C, impostor"), "undeclared context"),
    (("segment = 10000, 20000", "segment = 11000, 20000"), "scenario"),
    (("time_ms = 300", "time_ms = 300\ncolour = red"), "colour"),
    (("seed = 7", "seed = 7\nseed = 8"), "duplicate"),
])
def test_validation_errors(edit, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(SMALL.replace(*edit, 1), "x.cfg")


def test_validate_command(tmp_path, capsys):
    assert main(["validate", write(tmp_path, SMALL)]) == 0
    assert "2 classifiers" in capsys.readouterr().out
    bad = write(tmp_path, SMALL.replace("th_beta", "x").replace("seed = 7", "seed = -1"), "bad.cfg")
    assert main(["validate", bad]) == 1
    assert "seed" in capsys.readouterr().err


def test_missing_file_is_runtime_error(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.cfg")]) == 2


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, SMALL), "--out-dir", str(out), "--trials", "200"]) == 0
    table = capsys.readouterr().out
    assert "our_2x" in table
    det = sorted(os.listdir(out / "det"))
    assert len(det) == 10 and "cwma__A.csv" in det
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 200
    assert [r["approach"] for r in summary["approaches"]] == ["max", "sum", "cwma", "our_1x", "our_2x"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert "trace.csv" in manifest["files"] and manifest["seed"] == 7
    assert (out / "trace.csv").read_text().startswith("t_ms,context,beta")


def test_run_rejects_bad_trials(tmp_path):
    assert main(["run", write(tmp_path, SMALL), "--out-dir", str(tmp_path / "o"), "--trials", "0"]) == 1


def test_replay(tmp_path, capsys):
    trace = tmp_path / "scores.csv"
    # strong scores from both classifiers for 10 s, then poor ones
    write_trace(trace, [ScoreRecord(cid, 4.0 if t < 10_000 else -4.0, t)
                        for cid in ("f", "v") for t in range(0, 20_000, 500)])
    out = tmp_path / "rep"
    assert main(["replay", write(tmp_path, SMALL), str(trace), "--out-dir", str(out)]) == 0
    assert "20 steps" in capsys.readouterr().out
    rows = (out / "trace.csv").read_text().splitlines()[1:]
    assert rows[5].split(",")[3] == "unlocked"
    assert rows[-1].split(",")[3] == "locked"


def test_replay_rejects_bad_trace(tmp_path, capsys):
    trace = tmp_path / "scores.csv"
    trace.write_text("cid,alpha,t_ms\nf,nan,0\n")
    assert main(["replay", write(tmp_path, SMALL), str(trace), "--out-dir", str(tmp_path / "r")]) == 1
    assert "row 2" in capsys.readouterr().err
