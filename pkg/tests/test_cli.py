import csv
import hashlib
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from stratrelease import io as sio
from stratrelease.cli import main
from stratrelease.core import AbsoluteCost, Instance, Interval, ThresholdClassifier, UniformIntervalPrior
from stratrelease.distributions import DataDistribution
from stratrelease.instances import example_thresholds, random_threshold_instance

from oracles import interval_br, piecewise_accuracy


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def example2_file(tmp_path):
    p = tmp_path / "example2.json"
    p.write_text(sio.dumps(example_thresholds()))
    return p


@pytest.fixture
def random_file(tmp_path):
    p = tmp_path / "random.json"
    p.write_text(sio.dumps(random_threshold_instance(6, 8)))
    return p


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


# -- reproduce ---------------------------------------------------------------------


@pytest.mark.parametrize("target", ["table1", "example2", "claim-fpr", "subset-sum"])
def test_reproduce_targets_pass(capsys, target):
    code, out, _ = run(capsys, "reproduce", target)
    assert code == 0
    assert "FAIL" not in out and out.count("pass") >= 2


def test_reproduce_table1_rows(capsys, tmp_path):
    code, _, _ = run(capsys, "reproduce", "table1", "--out", str(tmp_path))
    rows = _rows((tmp_path / "reproduce.csv").read_text())
    assert rows[0] == ["quantity", "expected", "computed", "tolerance", "pass"]
    assert rows[1][0] == "U({h1})" and float(rows[1][1]) == pytest.approx(2 / 3) and rows[1][4] == "true"
    assert rows[2][0] == "U({h1,h2})" and float(rows[2][2]) == pytest.approx(1.0) and rows[2][4] == "true"


def test_reproduce_infeasible_subset_sum(capsys, tmp_path):
    code, _, _ = run(capsys, "reproduce", "subset-sum", "--a", "1,2", "--out", str(tmp_path))
    assert code == 0
    rows = _rows((tmp_path / "reproduce.csv").read_text())
    assert rows[1][:3] == ["feasible", "false", "false"] and rows[1][4] == "true"


def test_reproduce_exit_code_is_conjunction(monkeypatch, capsys):
    import stratrelease.cli as cli

    monkeypatch.setattr(cli, "release_utility", lambda inst, rel: 0.5)
    code, out, _ = run(capsys, "reproduce", "table1")
    assert code == 3 and "FAIL" in out


# -- evaluate / best response / project ----------------------------------------------


def test_evaluate_threshold_example(capsys, example2_file):
    code, out, _ = run(capsys, "evaluate", "--instance", str(example2_file), "--release", "1")
    assert code == 0
    res = json.loads(out)
    assert res["utility"] == pytest.approx(0.55)
    assert res["cutoff"] == pytest.approx(1.0)


def test_best_response_brute_equals_scan(capsys, random_file):
    results = {}
    for solver in ("brute", "scan"):
        code, out, _ = run(capsys, "best-response", "--instance", str(random_file), "--agent", "0.35", "--solver", solver)
        assert code == 0
        results[solver] = json.loads(out)
    assert results["brute"]["target"] == results["scan"]["target"]
    assert results["brute"]["utility"] == pytest.approx(results["scan"]["utility"], abs=1e-12)
    assert results["brute"]["oracle_calls"] == 2**6


def test_best_response_submodular_is_seeded(capsys, random_file):
    outs = [
        run(capsys, "best-response", "--instance", str(random_file), "--agent", "0.2", "--solver", "submodular", "--seed", "4")[1]
        for _ in range(2)
    ]
    assert outs[0] == outs[1]


def test_project(capsys, example2_file):
    code, out, _ = run(capsys, "project", "--instance", str(example2_file), "--agent", "1.0", "--positive", "0,1")
    assert code == 0
    res = json.loads(out)
    assert res["feasible"] and res["point"] == 2.0 and res["cost"] == pytest.approx(1.0)


# -- optimize -------------------------------------------------------------------------


def test_optimize_writes_report_and_candidates(capsys, tmp_path, random_file):
    out_dir = tmp_path / "opt"
    code, _, _ = run(capsys, "optimize", "--instance", str(random_file), "--method", "uniform", "--out", str(out_dir))
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    rows = _rows((out_dir / "candidates.csv").read_text())
    assert tuple(rows[0]) == ("candidate_id", "released_indices", "i", "l", "j", "cutoff", "utility", "rejected_reason")
    landing = 6 - random_threshold_instance(6, 8).deployed_index
    assert len(rows) == 1 + sum(range(1, 7)) * landing
    accepted = [r for r in rows[1:] if r[7] == ""]
    assert max(float(r[6]) for r in accepted) == pytest.approx(report["utility"])


def test_optimize_brute_matches_uniform(capsys, random_file):
    a = json.loads(run(capsys, "optimize", "--instance", str(random_file), "--method", "brute")[1])
    b = json.loads(run(capsys, "optimize", "--instance", str(random_file), "--method", "uniform")[1])
    assert a["utility"] == pytest.approx(b["utility"], abs=1e-9)


def test_csv_output_is_byte_identical(capsys, tmp_path, random_file):
    digests = []
    for name in ("a", "b"):
        run(capsys, "optimize", "--instance", str(random_file), "--out", str(tmp_path / name))
        digests.append(hashlib.sha256((tmp_path / name / "candidates.csv").read_bytes()).hexdigest())
    assert digests[0] == digests[1]
    raw = (tmp_path / "a" / "candidates.csv").read_bytes()
    assert b"\r\n" not in raw and raw.endswith(b"\n")


# -- sweep ---------------------------------------------------------------------------------


def _interval_file(tmp_path, f, h, a, b):
    inst = Instance(
        domain=Interval(0.0, 2.0),
        ground_truth=ThresholdClassifier(f),
        deployed=ThresholdClassifier(h),
        prior=UniformIntervalPrior(a, b),
        data=DataDistribution.uniform(0.0, 2.0),
        cost=AbsoluteCost(1.0),
    )
    p = tmp_path / "interval.json"
    p.write_text(sio.dumps(inst))
    return p


def test_sweep_d_rises_then_flattens(capsys, tmp_path):
    f = h = 0.5
    path = _interval_file(tmp_path, f, h, 0.2, 1.9)
    code, out, _ = run(capsys, "sweep", "--instance", str(path), "--param", "d", "--from", "0.5", "--to", "1.7", "--steps", "25")
    assert code == 0
    rows = _rows(out)[1:]
    ds = [float(r[0]) for r in rows]
    us = [float(r[1]) for r in rows]
    assert all(b >= a - 1e-12 for a, b in zip(us, us[1:]))
    assert all(u == pytest.approx(1.0) for d, u in zip(ds, us) if d >= f + 1)
    assert us[0] < 1.0
    data = DataDistribution.uniform(0.0, 2.0)
    for d, u in zip(ds, us):
        grid = piecewise_accuracy(
            lambda xs, d=d: (interval_br(xs, h, d) >= h) == (xs >= f), data.uniform_pieces, data.atoms, 0.0, 2.0, step=1e-3
        )
        assert abs(u - grid) <= 1e-6


def test_sweep_writes_deterministic_csv_and_svg(capsys, tmp_path):
    path = _interval_file(tmp_path, 0.3, 0.5, 0.0, 1.6)
    shas = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        code, _, _ = run(
            capsys, "sweep", "--instance", str(path), "--from", "0.3", "--to", "1.5", "--steps", "13", "--out", str(out_dir)
        )
        assert code == 0
        csv_bytes = (out_dir / "sweep.csv").read_bytes()
        svg_bytes = (out_dir / "sweep.svg").read_bytes()
        assert svg_bytes.lstrip().startswith(b"<?xml") and b"<svg" in svg_bytes
        assert b"xlink:href=\"http" not in svg_bytes
        manifest = json.loads((out_dir / "manifest.json").read_text())
        listed = {o["path"].rsplit("/", 1)[-1]: o["sha256"] for o in manifest["outputs"]}
        assert listed["sweep.csv"] == hashlib.sha256(csv_bytes).hexdigest()
        assert listed["sweep.svg"] == hashlib.sha256(svg_bytes).hexdigest()
        assert manifest["instance_sha256"] == hashlib.sha256(path.read_bytes()).hexdigest()
        shas.append((listed["sweep.csv"], listed["sweep.svg"]))
    assert shas[0] == shas[1]


def test_sweep_k_on_finite_prior(capsys, example2_file):
    code, out, _ = run(capsys, "sweep", "--instance", str(example2_file), "--param", "k", "--from", "0.5", "--to", "2", "--steps", "4")
    assert code == 0
    assert len(_rows(out)) == 5


# -- gen / sample / manifest -------------------------------------------------------------


@pytest.mark.parametrize("kind", ["table1", "example2", "claim-fpr", "subset-sum", "random-1d", "random-2d", "interval"])
def test_gen_round_trips(capsys, kind):
    code, out, _ = run(capsys, "gen", "--kind", kind, "--seed", "3", "--n", "4")
    assert code == 0
    assert sio.dumps(sio.loads(out)) == out


def test_sample_is_seeded(capsys, example2_file):
    a = run(capsys, "sample", "--instance", str(example2_file), "--count", "50", "--seed", "9")[1]
    b = run(capsys, "sample", "--instance", str(example2_file), "--count", "50", "--seed", "9")[1]
    assert a == b
    xs = np.array([float(r[0]) for r in _rows(a)[1:]])
    assert len(xs) == 50 and xs.min() >= 0 and xs.max() <= 2


def test_manifest_flag(capsys, tmp_path, example2_file):
    m = tmp_path / "m.json"
    code, _, _ = run(capsys, "evaluate", "--instance", str(example2_file), "--manifest", str(m))
    assert code == 0
    manifest = json.loads(m.read_text())
    assert manifest["command"][:2] == ["stratrelease", "evaluate"]
    assert set(manifest) >= {"instance_sha256", "seed", "version", "wall_clock_seconds", "outputs"}


# -- exit codes --------------------------------------------------------------------------


def test_validation_errors_exit_2(capsys, tmp_path, example2_file):
    assert run(capsys, "evaluate", "--instance", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "evaluate", "--instance", str(example2_file), "--release", "0")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"domain": {}}')
    assert run(capsys, "evaluate", "--instance", str(bad))[0] == 2
    assert run(capsys, "best-response", "--instance", str(example2_file), "--agent", "1", "--solver", "arrangement")[0] == 2


def test_thread_variable_validated(capsys, monkeypatch):
    monkeypatch.setenv("STRATRELEASE_THREADS", "zero")
    assert run(capsys, "reproduce", "table1")[0] == 2
    monkeypatch.setenv("STRATRELEASE_THREADS", "2")
    assert run(capsys, "reproduce", "table1")[0] == 0


def test_capability_guard_exit_4(capsys, tmp_path):
    p = tmp_path / "big.json"
    p.write_text(sio.dumps(random_threshold_instance(21, 0)))
    assert run(capsys, "optimize", "--instance", str(p), "--method", "brute")[0] == 4
    assert run(capsys, "best-response", "--instance", str(p), "--agent", "0.1", "--solver", "brute")[0] == 4


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "stratrelease", "reproduce", "example2"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert "cutoff({h2})" in proc.stdout
