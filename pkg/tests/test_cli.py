import json
import shutil
import subprocess
import sys

import pytest

from missionbt.bench import BenchmarkResult, MissionResult, run_bench, summarize
from missionbt.cli import main
from support import playbook_file
from missionbt.bench import dataset_root

MISSIONS = dataset_root() / "missions"


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "a1"
    assert main(["run", str(MISSIONS / "A1.json"), "--out", str(out)]) == 0
    assert "A1: Completed" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["success"] and report["reason"] == "Completed"
    assert (out / "trace.jsonl").read_text().count("\n") == report["ticks"] + 1
    stages = [json.loads(line)["stage"] for line in (out / "transcript.jsonl").read_text().splitlines()]
    assert stages[0] == "standardize"


def test_run_no_template_skips_standardize(tmp_path):
    out = tmp_path / "raw"
    assert main(["run", str(MISSIONS / "B2.json"), "--no-template", "--out", str(out)]) == 0
    stages = [json.loads(line)["stage"] for line in (out / "transcript.jsonl").read_text().splitlines()]
    assert "standardize" not in stages
    assert json.loads((out / "report.json").read_text())["template"] is False


def test_run_missing_playbook(tmp_path, capsys):
    shutil.copy(MISSIONS / "A1.json", tmp_path / "A1.json")
    assert main(["run", str(tmp_path / "A1.json"), "--out", str(tmp_path / "o")]) == 2
    assert "playbook not found" in capsys.readouterr().err


def test_run_failure_exit_code(tmp_path, capsys):
    code = main(["run", str(MISSIONS / "B3.json"), "--playbook", str(playbook_file("B3", "fail")),
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "IrreparableFailure" in capsys.readouterr().err


def test_run_plot_and_replay(tmp_path, capsys):
    out = tmp_path / "c2"
    assert main(["run", str(MISSIONS / "C2.json"), "--plot", "--out", str(out)]) == 0
    assert (out / "trajectories.png").stat().st_size > 0
    assert (out / "coverage.png").stat().st_size > 0
    digest = json.loads((out / "report.json").read_text())["trace_digest"]
    capsys.readouterr()
    assert main(["replay", str(out / "trace.jsonl"), "--digest", digest]) == 0
    assert "match" in capsys.readouterr().out
    lines = (out / "trace.jsonl").read_text().splitlines()
    rec = json.loads(lines[5])
    rec["time"] += 1.0
    lines[5] = json.dumps(rec)
    (out / "edited.jsonl").write_text("\n".join(lines) + "\n")
    assert main(["replay", str(out / "edited.jsonl")]) == 1
    assert f"mismatch at tick {rec['tick']}" in capsys.readouterr().out


def test_run_overrides(tmp_path):
    out = tmp_path / "short"
    assert main(["run", str(MISSIONS / "B1.json"), "--max-ticks", "3", "--seed", "5", "--out", str(out)]) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["reason"] == "Timeout" and report["ticks"] == 3
    header = json.loads((out / "trace.jsonl").read_text().splitlines()[0])
    assert header["sim"]["seed"] == 5


def write_mission(tmp_path, mutate):
    doc = json.loads((MISSIONS / "A1.json").read_text())
    mutate(doc)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.mark.parametrize(
    "mutate,code,needle",
    [
        (lambda d: None, 0, "A1: ok (3 robots"),
        (lambda d: d["standardized"]["tasks"][0].update(region_ids=[9]), 1, "unresolved region id 9"),
        (lambda d: d["standardized"]["tasks"][0].update(finish=""), 1, "completion criterion"),
        (lambda d: d["world"]["robots"].append(dict(d["world"]["robots"][0])), 1, "duplicate robot id"),
    ],
)
def test_validate(tmp_path, capsys, mutate, code, needle):
    assert main(["validate", str(write_mission(tmp_path, mutate))]) == code
    assert needle in capsys.readouterr().out


def test_validate_missing_and_malformed(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "none.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"mission_id\": \n")
    assert main(["validate", str(bad)]) == 1
    assert "line 3" in capsys.readouterr().out


def test_bench_is_deterministic(tmp_path, capsys):
    out = tmp_path / "bench.json"
    assert main(["bench", "--repeats", "2", "--both-template-modes", "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert "[with_template]" in table and "[without_template]" in table
    first = out.read_text()
    assert main(["bench", "--repeats", "2", "--both-template-modes", "--out", str(out)]) == 0
    assert out.read_text() == first
    data = json.loads(first)
    for mode in ("with_template", "without_template"):
        rows = {r["category"]: r for r in data["modes"][mode]["rows"]}
        assert rows["Overall"]["success_rate"] == 1.0
        assert rows["A"]["tokens_per_error"] is None


def failure_dataset(tmp_path):
    root = tmp_path / "ds"
    (root / "playbooks").mkdir(parents=True)
    shutil.copytree(MISSIONS, root / "missions")
    for f in MISSIONS.glob("*.json"):
        shutil.copy(playbook_file(f.stem, "fail"), root / "playbooks" / f"{f.stem}.yaml")
    return root


def test_bench_failure_injection(tmp_path):
    result = run_bench(failure_dataset(tmp_path), repeats=1)
    by_id = {r.mission_id: r for r in result.modes["with_template"]}
    assert all(r.errors >= 1 for r in by_id.values())
    assert by_id["B3"].successes == 0 and by_id["C3"].successes == 0
    assert by_id["A1"].successes == 1
    assert by_id["A1"].tokens_per_error == by_id["A1"].avg_output_tokens / by_id["A1"].errors
    rendered = result.render()
    assert "Overall" in rendered and " - " not in rendered.splitlines()[-2]


def test_bench_missing_playbooks_reported(tmp_path):
    shutil.copytree(MISSIONS, tmp_path / "missions")
    result = run_bench(tmp_path, repeats=1)
    assert all(r.successes == 0 for r in result.modes["with_template"])
    assert all(reason.startswith("error:") for r in result.modes["with_template"] for reason in r.reasons)
    with pytest.raises(ValueError):
        run_bench(tmp_path, repeats=0)


def test_summary_averaging():
    rows = [
        MissionResult("X1", "A", 2, 2, 100.0, 10.0, 0.0, 0, None),
        MissionResult("X2", "A", 2, 1, 300.0, 30.0, 0.0, 2, 30.0),
    ]
    s = summarize("A", rows)
    assert s.success_rate == 0.75 and s.avg_input_tokens == 200.0
    assert s.tokens_per_error == 30.0
    assert summarize("B", []).missions == 0
    table = BenchmarkResult(2, {"with_template": rows}).render()
    assert "-" in table.splitlines()[3]  # category B row has no errors


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "missionbt.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("run", "bench", "validate", "replay"):
        assert name in proc.stdout
