import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from fillrad.cli import main
from fillrad.metric_core import read_metric_csv


def run(args, code=0):
    result = CliRunner().invoke(main, [str(a) for a in args])
    assert result.exit_code == code, result.output + (result.stderr if result.stderr_bytes else "")
    return result


@pytest.fixture(scope="module")
def circle_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("circle")
    run(["sample", "--manifold", "circle", "--n", 64, "--out", d / "c.csv"])
    return d


def test_sample_writes_csv_and_sidecar(circle_files):
    space = read_metric_csv(circle_files / "c.csv")
    assert space.n == 64
    meta = json.loads((circle_files / "c.json").read_text())
    assert meta["config"] == {"manifold": "circle", "circumference": 2 * math.pi, "n": 64}
    assert meta["distances"] == "c.csv"


def test_pipeline_closure(circle_files):
    d = circle_files
    run(["persist", "--in", d / "c.csv", "--maxdim", 2, "--threshold", 2.5, "--out", d / "bars.json"])
    bars = json.loads((d / "bars.json").read_text())
    assert bars["maxdim"] == 2 and bars["threshold"] == 2.5
    run(["fillrad", "--in", d / "c.csv", "--meta", d / "c.json", "--out", d / "est.json"])
    est = json.loads((d / "est.json").read_text())
    assert abs(est["estimate"] - math.pi / 3) <= 0.05
    assert est["convention"] == "half-death, diameter-VR"
    res = run(["bounds", "--meta", d / "c.json", "--est", d / "est.json", "--out", d / "report.json"])
    assert "katz" in res.output and "FAIL" not in res.output
    assert json.loads((d / "report.json").read_text())["passed"]
    for probe in (["reach", "--in", d / "c.csv"], ["project", "--in", d / "c.csv"],
                  ["retract", "--in", d / "c.csv", "--meta", d / "c.json"]):
        out = d / f"{probe[0]}.json"
        run(["probe", *probe, "--out", out])
        audit = json.loads(out.read_text())
        assert audit["violation_count"] == 0


def test_cylinder_probe(tmp_path):
    run(["sample", "--manifold", "torus", "--nL", 10, "--nl", 6, "--out", tmp_path / "t.csv"])
    run(["probe", "cylinder", "--meta", tmp_path / "t.json", "--out", tmp_path / "cyl.json"])
    audit = json.loads((tmp_path / "cyl.json").read_text())
    assert audit["violation_count"] == 0 and len(audit["parameters"]["grid"]) == 16


def test_four_point_circle(tmp_path):
    d = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float) * math.pi / 2
    path = tmp_path / "four.csv"
    path.write_text("".join(",".join(repr(float(x)) for x in row) + "\n" for row in d))
    run(["persist", "--in", path, "--maxdim", 2, "--out", tmp_path / "b.json"])
    bars = json.loads((tmp_path / "b.json").read_text())
    h1 = [(p["birth"], p["death"]) for p in bars["pairs"] if p["dim"] == 1]
    assert h1 == [(pytest.approx(math.pi / 2), pytest.approx(math.pi))]


def test_single_point_exits_one(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("0\n")
    res = run(["fillrad", "--in", path, "--dim", 1, "--out", tmp_path / "e.json"], code=1)
    assert json.loads(res.stderr)["error"] == "NoDominantBar"
    assert not (tmp_path / "e.json").exists()


def test_budget_exceeded_exits_three(circle_files, tmp_path):
    res = run(["persist", "--in", circle_files / "c.csv", "--maxdim", 3, "--budget", 100,
               "--out", tmp_path / "b.json"], code=3)
    assert json.loads(res.stderr)["error"] == "SimplexBudgetExceeded"


def test_usage_errors_exit_two(tmp_path):
    run(["fillrad", "--in", tmp_path / "missing.csv", "--out", tmp_path / "e.json"], code=2)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n2,0\n")
    res = run(["persist", "--in", bad, "--out", tmp_path / "b.json"], code=2)
    assert json.loads(res.stderr)["error"] == "AsymmetricInput"
    run(["sample", "--manifold", "klein", "--out", tmp_path / "k.csv"], code=2)


def test_failed_verdict_exits_one(circle_files, tmp_path):
    meta = json.loads((circle_files / "c.json").read_text())
    meta["inj"] = 3 * math.pi
    (tmp_path / "bad.json").write_text(json.dumps(meta))
    (tmp_path / "c.csv").write_bytes((circle_files / "c.csv").read_bytes())
    run(["fillrad", "--in", circle_files / "c.csv", "--dim", 1, "--out", tmp_path / "est.json"])
    res = run(["bounds", "--meta", tmp_path / "bad.json", "--est", tmp_path / "est.json",
               "--out", tmp_path / "r.json"], code=1)
    assert "FAIL" in res.output


def test_reruns_are_byte_identical(tmp_path):
    outputs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        run(["sample", "--manifold", "sphere2", "--n", 40, "--seed", 3, "--out", d / "s.csv"])
        run(["fillrad", "--in", d / "s.csv", "--meta", d / "s.json", "--out", d / "e.json"])
        run(["probe", "project", "--in", d / "s.csv", "--seed", 1, "--out", d / "p.json"])
        outputs.append([(d / f).read_bytes() for f in ("s.csv", "s.json", "e.json", "p.json")])
    assert outputs[0] == outputs[1]


def test_suite_subset_is_reproducible_across_thread_counts(tmp_path):
    for threads in (1, 2):
        run(["suite", "--only", "circle", "--only", "rp2", "--threads", threads, "--out-dir", tmp_path / str(threads)])
    files = sorted(p.relative_to(tmp_path / "1") for p in (tmp_path / "1").rglob("*.json"))
    assert files and all((tmp_path / "1" / f).read_bytes() == (tmp_path / "2" / f).read_bytes() for f in files)
    summary = json.loads((tmp_path / "1" / "suite.json").read_text())
    assert summary["passed"] and [s["scenario"] for s in summary["scenarios"]] == ["circle", "rp2"]


@pytest.mark.slow
def test_full_suite_passes(tmp_path):
    res = run(["suite", "--out-dir", tmp_path])
    for name in ("circle", "sphere2", "torus", "rp2", "quotient"):
        report = json.loads((tmp_path / name / "report.json").read_text())
        assert report["passed"], report
        assert f"PASS  {name}" in res.output
