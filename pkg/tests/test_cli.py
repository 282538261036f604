import csv

import pytest

from taim import cli
from taim.cli import load_graph_artifact, main, read_csv
from taim.graph import load_edge_list

EXPERIMENT = """\
[experiment]
dataset = powerlaw:150,2.5,4,1
T = 3
K = 4
trials = {trials}
seed = 5
output = {out}

[selector]
mode = fixed
count = 2000

[policy.nonad]
[policy.greedy]
[policy.static]
k = 1,3
[policy.ff]
theta = 0.2,0.8
L = 30
[policy.sof]
L = 3
inner_rr = 200
"""


@pytest.fixture
def edge_file(tmp_path):
    p = tmp_path / "wiki.txt"
    p.write_text("# toy\n1 2\n3 2\n1 3\n2 4\n")
    return p


def test_ingest_roundtrip_and_idempotent(tmp_path, edge_file, capsys):
    a, b = tmp_path / "a.taim", tmp_path / "b.taim"
    assert main(["ingest", str(edge_file), "-o", str(a)]) == 0
    assert main(["ingest", str(edge_file), "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    g = load_graph_artifact(a)
    ref = load_edge_list(edge_file, "wc")
    assert (g.n, g.m) == (ref.n, ref.m) == (4, 4)
    assert g.meta["prob_model"] == "wc"
    assert list(g.prob) == list(ref.prob)
    assert g.label(0) == "1"


def test_ingest_bad_flag(tmp_path, edge_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ingest", str(edge_file), "-o", str(tmp_path / "x"), "--prob-model", "uniform:7"])
    assert exc.value.code == 1
    assert "--prob-model" in capsys.readouterr().err


def test_ingest_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n1 2 3 4\n")
    assert main(["ingest", str(bad), "-o", str(tmp_path / "x")]) == 1
    assert ":2" in capsys.readouterr().err


def test_missing_input(tmp_path):
    assert main(["ingest", str(tmp_path / "nope"), "-o", str(tmp_path / "x")]) == 1


def _run(tmp_path, trials=2, name="out"):
    out = tmp_path / name
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(EXPERIMENT.format(trials=trials, out=out))
    assert main(["run", str(cfg)]) == 0
    return out


def test_run_outputs(tmp_path):
    out = _run(tmp_path)
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "# schema_version=1" and lines[1].startswith("# spec=")
    rows = read_csv(out / "results.csv")
    assert list(rows[0].keys()) == cli.RESULT_COLUMNS
    assert [r["policy"] for r in rows] == ["nonad", "greedy", "static", "static", "ff", "ff", "sof"]
    traces = read_csv(out / "traces.csv")
    assert len(traces) == 7 * 2 * 3
    for r in traces:
        assert 0 <= int(r["cumulative_budget"]) <= 4


def test_run_single_trial_well_formed(tmp_path):
    out = _run(tmp_path, trials=1)
    rows = read_csv(out / "results.csv")
    assert all(float(r["stddev"]) == 0.0 for r in rows)


def test_run_deterministic(tmp_path):
    a = read_csv(_run(tmp_path, name="a") / "results.csv")
    b = read_csv(_run(tmp_path, name="b") / "results.csv")
    strip = lambda rows: [{k: v for k, v in r.items() if k != "mean_wall_time_per_decision"} for r in rows]
    assert strip(a) == strip(b)
    ta = (tmp_path / "a" / "traces.csv").read_text().splitlines()[2:]
    tb = (tmp_path / "b" / "traces.csv").read_text().splitlines()[2:]
    assert ta == tb


def test_run_bad_config(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\ndataset = powerlaw:50,2.5,3,1\nT = 2\nK = 1\n")
    assert main(["run", str(cfg)]) == 1
    assert main(["run", str(tmp_path / "missing.ini")]) == 1


def test_gap_report(tmp_path):
    out = tmp_path / "gap.csv"
    assert main(["gap", "--N", "2", "100000", "--trials", "2000", "-o", str(out)]) == 0
    rows = read_csv(out)
    assert float(rows[0]["delta_ad"]) == pytest.approx(3.5625, rel=1e-9)
    assert float(rows[0]["delta_nonad"]) == pytest.approx(3.25, rel=1e-9)
    assert float(rows[0]["exhaustive_nonad"]) == pytest.approx(3.25, rel=1e-9)
    assert rows[1]["exhaustive_nonad"] == ""
    assert float(rows[1]["limit"]) == pytest.approx(3.1363051, abs=1e-6)


def test_gap_empty(tmp_path):
    out = tmp_path / "gap.csv"
    assert main(["gap", "--N", "-o", str(out)]) == 0
    body = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert body == [",".join(cli.GAP_COLUMNS)]


def test_verify_quick_passes(capsys):
    assert main(["verify", "--tier", "quick"]) == 0
    assert "8/8 checks passed" in capsys.readouterr().out


def test_verify_detects_depth_bias(capsys):
    assert main(["verify", "--inject-depth-bias", "1"]) == 2
    assert "FAIL rr_unbiased" in capsys.readouterr().out
