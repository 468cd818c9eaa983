import os
import subprocess
import sys
from pathlib import Path

import pytest

from dirichlet_graph.cli import Report, RunConfig, UsageError, render, run
from dirichlet_graph.graph import ball, generate
from dirichlet_graph.io import read_graph
from dirichlet_graph.potential import capacity_sequence

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"

CASES = {
    "classify_z": ["classify", "--question", "recurrence", "--gen", "lattice:1", "--origin", "0", "--radii", "10,20,40", "--tol", "1e-2"],
    "classify_killed": ["classify", "--question", "sc", "--graph", str(DATA / "single_killed.g"), "--alpha", "1"],
    "capacity_tree": ["capacity", "--gen", "tree:2", "--origin", "root", "--radius", "2"],
    "green_p3": ["green", "--graph", str(DATA / "p3.g"), "--u", str(DATA / "center_indicator.fn")],
    "gen_z2": ["gen", "lattice:2", "--radius", "3"],
    "resolvent_z": ["resolvent", "--gen", "lattice:1", "--origin", "0", "--radii", "2,4,8", "--alpha", "1"],
    "witness_z": ["witness", "--gen", "lattice:1", "--origin", "0", "--radius", "3", "--u", str(DATA / "center_indicator_z.fn")],
}


def cli(argv, capsys):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def subprocess_cli(argv, threads):
    env = dict(os.environ, DIRICHLET_GRAPH_THREADS=str(threads))
    proc = subprocess.run([sys.executable, "-m", "dirichlet_graph", *argv], capture_output=True, env=env, check=True)
    return proc.stdout


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, capsys):
    code, out, _ = cli(CASES[name], capsys)
    assert code == 0
    assert out.encode() == (GOLDEN / f"{name}.csv").read_bytes()


@pytest.mark.parametrize("name", ["classify_z", "capacity_tree", "gen_z2"])
def test_byte_determinism_across_threads(name):
    a = subprocess_cli(CASES[name], 1)
    b = subprocess_cli(CASES[name], 4)
    assert a == b == (GOLDEN / f"{name}.csv").read_bytes()


def test_classify_z_rows(capsys):
    _, out, _ = cli(CASES["classify_z"], capsys)
    rows = [line.split(",") for line in out.splitlines() if line and not line.startswith("#")]
    assert rows[0] == ["radius", "capacity"]
    for (r, v), n in zip(rows[1:], (10, 20, 40)):
        assert int(r) == n and float(v) == pytest.approx(2 / n, rel=1e-12)
    assert out.splitlines()[-1].startswith("# verdict=")


def test_classify_killed(capsys):
    _, out, _ = cli(CASES["classify_killed"], capsys)
    assert "1,0.5\n" in out and out.endswith("# verdict=negative\n")


def test_capacity_tree(capsys):
    _, out, _ = cli(CASES["capacity_tree"], capsys)
    line = next(s for s in out.splitlines() if s.startswith("capacity,"))
    assert float(line.split(",")[1]) == pytest.approx(4 / 3, rel=1e-15)


def test_green_p3(capsys):
    _, out, _ = cli(CASES["green_p3"], capsys)
    assert "boundary_sum,0\n" in out


def test_gen_writes_valid_file(tmp_path, capsys):
    path = tmp_path / "z2r3.g"
    assert run(["gen", "lattice:2", "--radius", "3", "--out", str(path)]) == 0
    g = read_graph(path)
    assert len(g) == 25
    assert cli(["validate", str(path)], capsys)[0] == 0


def test_gen_round_trip(tmp_path, capsys):
    path = tmp_path / "tree.g"
    run(["gen", "tree:2", "--radius", "6", "--out", str(path)])
    code, out, _ = cli(["classify", "--graph", str(path), "--origin", "root", "--radii", "2,4,6", "--tol", "1e-3"], capsys)
    assert code == 0
    file_vals = [float(line.split(",")[1]) for line in out.splitlines() if line[:1].isdigit()]
    direct = capacity_sequence(generate("regular_tree", k=2), (), [2, 4, 6]).values
    # file ids sort as strings, so summation order and the last bit may differ
    assert all(abs(a - b) <= 1e-12 * b for a, b in zip(file_vals, direct))


def test_gen_round_trip_keeps_sphere_degree(tmp_path):
    path = tmp_path / "z.g"
    run(["gen", "lattice:1", "--radius", "4", "--out", str(path)])
    g = read_graph(path)
    ref = ball(generate("lattice", d=1), 0, 4).realization
    assert g.deg == ref.deg and g.interior == ref.interior


@pytest.mark.parametrize(
    "argv,code",
    [
        (["validate", str(DATA / "p3.g")], 0),
        (["validate", str(DATA / "asymmetric.g")], 1),
        (["validate", str(DATA / "bad_weight.g")], 1),
        (["validate", str(DATA / "inf_weight.g")], 1),
        (["validate", str(DATA / "malformed.g")], 2),
        (["validate", str(DATA / "missing.g")], 2),
        (["classify", "--gen", "lattice:1", "--radii", ","], 2),
        (["classify", "--gen", "lattice:1", "--radii", "4,2"], 2),
        (["classify", "--gen", "lattice:1", "--radii", "a,b"], 2),
        (["classify", "--gen", "lattice:1", "--graph", str(DATA / "p3.g")], 2),
        (["classify", "--gen", "lattice:1", "--tol", "0"], 2),
        (["classify", "--gen", "lattice:1", "--question", "sc", "--alpha", "-1"], 2),
        (["classify", "--gen", "nosuchfamily"], 1),
        (["classify", "--graph", str(DATA / "bad_weight.g"), "--origin", "a"], 1),
        (["classify", "--graph", str(DATA / "missing.g")], 2),
        (["capacity", "--gen", "lattice:2", "--origin", "(0,0)", "--radius", "10", "--max-iter", "1"], 3),
        (["capacity", "--gen", "lattice:1", "--radius", "0"], 2),
        (["green", "--gen", "lattice:1", "--u", str(DATA / "center_indicator_z.fn")], 2),
        (["green", "--graph", str(DATA / "p3.g"), "--u", str(DATA / "missing.fn")], 2),
        (["nosuchcommand"], 2),
        ([], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert cli(argv, capsys)[0] == code


def test_validate_names_the_pair(capsys):
    _, out, _ = cli(["validate", str(DATA / "asymmetric.g")], capsys)
    assert "(a,b)" in out


def test_green_defect_requires_interior_support(capsys):
    code, _, err = cli(["green", "--graph", str(DATA / "p3.g"), "--u", str(DATA / "center_indicator.fn"), "--v", str(DATA / "p3_end.fn")], capsys)
    assert code == 0
    code, _, err = cli(["green", "--gen", "lattice:1", "--origin", "0", "--radius", "1", "--u", str(DATA / "center_indicator_z.fn"), "--v", str(DATA / "z_edge.fn")], capsys)
    assert code == 1 and "vertex 1" in err and "outside the realization" in err


def test_out_file_matches_stdout(tmp_path, capsys):
    _, out, _ = cli(CASES["capacity_tree"], capsys)
    path = tmp_path / "cap.csv"
    assert run(CASES["capacity_tree"] + ["--out", str(path)]) == 0
    assert path.read_bytes() == out.encode()


def test_text_format(capsys):
    code, out, _ = cli(CASES["capacity_tree"] + ["--format", "text"], capsys)
    assert code == 0 and "command: capacity" in out and "verdict" not in out


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig("classify", "x", 0, radii=[2, 1])
    with pytest.raises(UsageError):
        RunConfig("classify", "x", 0, tol=-1.0)
    with pytest.raises(UsageError):
        RunConfig("classify", "x", 0, alpha=0.0)


def test_render_is_plain_csv():
    rep = Report(meta=[("a", "1")])
    rep.table(("x", "y"), [(1, 0.1), (2, True)])
    assert render(rep, "csv") == "# a=1\nx,y\n1,0.10000000000000001\n2,1\n"
