import json

import numpy as np
import pytest

from dtwmean import Instance, TimeSeries, brute_force_mean
from dtwmean.cli import main
from dtwmean.series import LabeledSeries, format_ucr, save_instance
from dtwmean.warping import GlobalConstraint


def write(tmp_path, name, values):
    path = tmp_path / name
    path.write_text(json.dumps(values))
    return str(path)


@pytest.fixture
def ucr(tmp_path):
    rng = np.random.default_rng(2)
    rows = [LabeledSeries(i % 3 + 1, TimeSeries(rng.normal(size=40))) for i in range(12)]
    path = tmp_path / "toy_TRAIN.tsv"
    path.write_text(format_ucr(rows))
    return str(path)


def test_dtw_identical(tmp_path, capsys):
    a = write(tmp_path, "a.json", [3, 1, 4, 1])
    assert main(["dtw", "--a", a, "--b", a, "--path"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["distance"] == 0.0
    assert out["path"] == [[1, 1], [2, 2], [3, 3], [4, 4]]


def test_dtw_plain_number_file(tmp_path, capsys):
    a = tmp_path / "a.txt"
    a.write_text("0 1\n2\n")
    b = write(tmp_path, "b.json", {"values": [0, 2]})
    assert main(["dtw", "--a", str(a), "--b", b]) == 0
    assert json.loads(capsys.readouterr().out)["cost"] == pytest.approx(1.0)


def test_solve_matches_oracle(tmp_path, capsys):
    inst = Instance((TimeSeries([0, 1, 2]), TimeSeries([2, -1, 0, 1])), GlobalConstraint.itakura("1.5"))
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    mean = tmp_path / "mean.json"
    code = main(["solve", "--instance", str(path), "--formulation", "arc:quadratic",
                 "--mean-out", str(mean)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "optimal"
    assert out["formulation"] == "arc:quadratic" and out["constraint"] == "itakura:1.5"
    assert abs(out["p"] - brute_force_mean(inst).F) <= 1e-6
    assert len(json.loads(mean.read_text())) >= 1


def test_solve_constraint_override_is_infeasible(tmp_path, capsys):
    a = write(tmp_path, "a.json", [1.0])
    b = write(tmp_path, "b.json", [1, 2, 3, 4])
    assert main(["solve", "--series", a, b, "--constraint", "sakoe-chiba:0"]) == 2
    assert "infeasible" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve"],
    ["solve", "--series", "missing.json"],
    ["solve", "--series", "{a}", "--formulation", "arc"],
    ["solve", "--series", "{a}", "--constraint", "diamond:2"],
])
def test_usage_errors_exit_1(tmp_path, argv):
    a = write(tmp_path, "a.json", [1, 2])
    assert main([x.replace("{a}", a) for x in argv]) == 1


def test_unknown_subcommand_exits_1():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1


def test_bounds_report(tmp_path, capsys):
    a = write(tmp_path, "a.json", [1, 5])
    b = write(tmp_path, "b.json", [3])
    assert main(["bounds", "--series", a, b]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) == {"ub_sim", "lb_sim", "ub_imp", "lb_imp", "per_index", "frechet_lb"}
    assert rep["ub_imp"] == pytest.approx(4, abs=1e-8)


def test_export_to_file(tmp_path, capsys):
    a = write(tmp_path, "a.json", [0, 1, 2])
    out = tmp_path / "m.lp"
    assert main(["export", "--series", a, a, "--formulation", "vertex:linear", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("\\") or text.startswith("Minimize")
    assert "Binaries" in text and text.rstrip().endswith("End")


def test_oracle_guard(tmp_path, capsys):
    a = write(tmp_path, "a.json", [0, 1, 2, 3])
    assert main(["oracle", "--series", a, a]) == 0
    assert json.loads(capsys.readouterr().out)["F"] == 0.0
    assert main(["oracle", "--series", a, a, "--guard", "3"]) == 1


def test_dataset_sampling(ucr, capsys):
    assert main(["bounds", "--dataset", ucr, "--k", "2", "--m", "5", "--seed", "4"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert len(rep["per_index"]) == 8


def test_bench_long_layout_reproducible(ucr, tmp_path, capsys):
    argv = ["bench", "--dataset", ucr, "--k", "2", "--m", "3", "--reps", "2",
            "--constraints", "free,narrow", "--formulations", "arc:quadratic,vertex:implicit",
            "--node-limit", "50", "--omit-timing"]
    assert main(argv + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b.csv")]) == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    lines = a.splitlines()
    assert lines[0] == "variant,constraint,graph,distance,gap,nodes,seconds,reps"
    assert len(lines) == 5
    assert all(line.split(",")[6] == "NA" for line in lines[1:])
    assert lines[1].startswith("k2-m3-free,free,arc,quadratic,")


def test_bench_table_layout(ucr, capsys):
    assert main(["bench", "--dataset", ucr, "--k", "2", "--m", "3", "--reps", "1",
                 "--constraints", "narrow", "--formulations", "arc:quadratic,arc:linear",
                 "--layout", "table"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "variant,constraint,reps,arc:quadratic,arc:linear"
    assert lines[1].startswith("k2-m3-narrow,narrow,1,")


def test_bench_unknown_variant(ucr, capsys):
    assert main(["bench", "--dataset", ucr, "--constraints", "tight"]) == 1
