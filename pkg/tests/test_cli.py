import json
import sys

import pytest

from qnetopt.cli import main

SPHERE_STUDY = """
[study]
use_case = "synthetic"
method = "surrogate"

[synthetic]
function = "sphere"
dim = 3
noise = 0.01

[settings]
cycles = 10
n = 2
l = 2
k0 = 3
d = 2.0
seed = 7
rf_trees = 25
"""


def write_study(tmp_path, body, name="study.toml"):
    path = tmp_path / name
    path.write_text(body)
    return path


def read_rows(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def test_optimize_row_count_and_outputs(tmp_path):
    cfg = write_study(tmp_path, SPHERE_STUDY)
    out = tmp_path / "run1"
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 0
    header, rows = read_rows(out / "dataset.csv")
    assert header == ["cycle", "x0", "x1", "x2", "U_0", "aggregate", "n"]
    assert len(rows) == 3 + 10 * 2  # k0 + cycles * l
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["seed"] == 7
    assert meta["method"] == "surrogate"
    assert "numpy" in meta["versions"]
    profile = json.loads((out / "profile.json").read_text())
    assert abs(sum(profile["fractions"].values()) - 1.0) < 1e-6
    best = json.loads((out / "best_config.json").read_text())
    assert set(best["params"]) == {"x0", "x1", "x2"}


def test_optimize_byte_identical_reruns(tmp_path):
    cfg = write_study(tmp_path, SPHERE_STUDY)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append((out / "dataset.csv").read_bytes())
    assert outs[0] == outs[1]


def test_baseline_methods(tmp_path):
    cfg = write_study(tmp_path, SPHERE_STUDY)
    for method in ("random", "annealing"):
        out = tmp_path / method
        assert main(["baseline", "--config", str(cfg), "--method", method, "--out", str(out)]) == 0
        header, rows = read_rows(out / "dataset.csv")
        assert len(rows) == 3 + 10 * 2  # budget-matched to the surrogate run
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["method"] == method


def test_confirm_deterministic_objective(tmp_path):
    cfg = write_study(
        tmp_path,
        SPHERE_STUDY.replace("noise = 0.01", "noise = 0.0").replace("cycles = 10", "cycles = 1"),
    )
    out = tmp_path / "run"
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 0
    assert (
        main(
            [
                "confirm",
                "--config",
                str(cfg),
                "--best",
                str(out / "best_config.json"),
                "--n-exec",
                "50",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    confirm = json.loads((out / "confirm.json").read_text())
    assert confirm["n_exec"] == 50
    assert confirm["standard_errors"] == [0.0]


UNIFORM_STUB = """
import json, random, sys
req = json.loads(sys.stdin.readline())
rng = random.Random(req["seed"])
sys.stdout.write(json.dumps([rng.random()]) + "\\n")
"""


def uniform_study(tmp_path):
    stub = tmp_path / "uniform_stub.py"
    stub.write_text(UNIFORM_STUB)
    cfg = f"""
[study]
use_case = "external"

[external]
command = [{json.dumps(sys.executable)}, {json.dumps(str(stub))}]
m = 1
timeout = 30.0

[settings]
seed = 3

[[space.params]]
name = "x"
kind = "continuous"
bounds = [0.0, 1.0]
"""
    return write_study(tmp_path, cfg, name="uniform.toml")


def test_confirm_uniform_standard_error(tmp_path):
    # SE of the mean of 1000 U(0,1) draws: 1/sqrt(12*1000) = 0.00913 +/- 20%
    cfg = uniform_study(tmp_path)
    best = tmp_path / "best.json"
    best.write_text(json.dumps({"format": "qnetopt-best", "params": {"x": 0.5}}))
    out = tmp_path / "confirm_out"
    code = main(
        ["confirm", "--config", str(cfg), "--best", str(best), "--n-exec", "1000", "--out", str(out)]
    )
    assert code == 0
    confirm = json.loads((out / "confirm.json").read_text())
    se = confirm["standard_errors"][0]
    assert abs(se - 0.00913) / 0.00913 < 0.2
    assert abs(confirm["mean_utilities"][0] - 0.5) < 0.05


def test_confirm_missing_best_file(tmp_path):
    cfg = write_study(tmp_path, SPHERE_STUDY)
    assert main(["confirm", "--config", str(cfg), "--best", str(tmp_path / "nope.json")]) == 1


def test_pareto_single_row(tmp_path):
    cfg = write_study(tmp_path, SPHERE_STUDY)
    data = tmp_path / "one.csv"
    data.write_text("cycle,x0,x1,x2,U_0,aggregate,n\n0,0.1,0.2,0.3,1.5,1.5,2\n")
    out = tmp_path / "rep"
    assert main(["pareto", "--config", str(cfg), "--dataset", str(data), "--out", str(out)]) == 0
    report = json.loads((out / "pareto_report.json").read_text())
    assert report["dominating_fraction"] == 1.0


def test_pareto_toy_two_objective(tmp_path):
    cfg = write_study(
        tmp_path,
        SPHERE_STUDY.replace('function = "sphere"\ndim = 3', 'function = "sphere"\ndim = 1'),
    )
    data = tmp_path / "toy.csv"
    rows = [(0.1, 1.0, 1.0), (0.2, 2.0, 0.0), (0.3, 0.0, 2.0), (0.4, 0.5, 0.5)]
    lines = ["cycle,x0,U_0,U_1,aggregate,n"]
    lines += [f"0,{x},{u0},{u1},{u0+u1},1" for x, u0, u1 in rows]
    data.write_text("\n".join(lines) + "\n")
    out = tmp_path / "rep2"
    assert main(["pareto", "--config", str(cfg), "--dataset", str(data), "--out", str(out)]) == 0
    report = json.loads((out / "pareto_report.json").read_text())
    assert report["dominating_indices"] == [0, 1, 2]


def test_pareto_malformed_csv_reports_row(tmp_path, capsys):
    cfg = write_study(tmp_path, SPHERE_STUDY)
    data = tmp_path / "bad.csv"
    data.write_text("cycle,x0,x1,x2,U_0,aggregate,n\n0,0.1,0.2,0.3,1.5,1.5,2\n0,oops,0.2\n")
    assert main(["pareto", "--config", str(cfg), "--dataset", str(data)]) == 1
    assert "row 3" in capsys.readouterr().err


def test_simulate_qes_subcommand(tmp_path):
    cfg = write_study(
        tmp_path,
        """
[study]
use_case = "qes"

[qes]
link_lengths = [2.0, 2.0, 2.0]
server_index = 0
alphas = [0.05, 0.05, 0.05]

[settings]
seed = 4
""",
        name="qes.toml",
    )
    out = tmp_path / "qes.csv"
    assert main(["simulate", "qes", "--config", str(cfg), "--out", str(out)]) == 0
    header, rows = read_rows(out)
    assert header == ["node", "rate", "mean_fidelity", "swap_count", "utility"]
    assert len(rows) == 2
    assert all(float(r[1]) > 0 for r in rows)


def test_simulate_cd_subcommand(tmp_path):
    cfg = write_study(
        tmp_path,
        """
[study]
use_case = "cd"

[cd]
nodes = 3
users = "all"
q_swap = [0.2, 0.5, 0.5]

[settings]
seed = 4
""",
        name="cd.toml",
    )
    out = tmp_path / "cd.csv"
    assert main(["simulate", "cd", "--config", str(cfg), "--out", str(out)]) == 0
    header, rows = read_rows(out)
    assert header == ["node", "mean_virtual_neighbors"]
    assert len(rows) == 3
    assert sum(float(r[1]) for r in rows) <= 6.0


def test_exit_codes(tmp_path):
    assert main(["optimize", "--config", str(tmp_path / "missing.toml")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["optimize"])  # missing required flag: user error
    assert exc.value.code == 1
    bad = write_study(tmp_path, "[study]\nuse_case = 'nope'\n", name="bad.toml")
    assert main(["optimize", "--config", str(bad)]) == 1
    # runtime failure: external objective that always crashes
    stub = tmp_path / "crash.py"
    stub.write_text("import sys; sys.exit(9)")
    cfg = write_study(
        tmp_path,
        f"""
[study]
use_case = "external"

[external]
command = [{json.dumps(sys.executable)}, {json.dumps(str(stub))}]
m = 1

[settings]
cycles = 1
n = 1
l = 1
k0 = 1

[[space.params]]
name = "x"
kind = "continuous"
bounds = [0.0, 1.0]
""",
        name="crash.toml",
    )
    assert main(["optimize", "--config", str(cfg), "--out", str(tmp_path / "crash_out")]) == 2
    # objective failures still flush the partial dataset
    assert (tmp_path / "crash_out" / "dataset.csv").exists()


def test_cd_network_from_edge_file(tmp_path):
    edge_file = tmp_path / "net.edges"
    edge_file.write_text("0 1\n1 2\n1 3\n")
    cfg = write_study(
        tmp_path,
        f"""
[study]
use_case = "cd"

[cd]
edge_file = {json.dumps(str(edge_file))}
q_swap = [0.5, 0.5, 0.5, 0.5]
users = "all"

[settings]
seed = 1
""",
        name="cdfile.toml",
    )
    out = tmp_path / "cdfile.csv"
    assert main(["simulate", "cd", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows = read_rows(out)
    assert len(rows) == 4
