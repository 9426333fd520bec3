import json
import subprocess
import sys

import pytest

from qubosmith import energy, read_qubo
from qubosmith.bitpack import unpack_bits
from qubosmith.cli import main
from qubosmith.generators import Graph, format_gset, random_graph


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def tri_file(tmp_path):
    p = tmp_path / "tri.qubo"
    p.write_text("qubo 2 3\n0 0 1\n0 1 -3\n1 1 1\n")
    return p


def strip_timing(d):
    d = dict(d)
    for key in ("timestamp", "solve_time_s"):
        d.pop(key)
    d["metadata"] = {k: v for k, v in d["metadata"].items() if "time" not in k}
    return d


def test_generate_counts_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.qubo", tmp_path / "b.qubo"
    code, out, _ = run(capsys, "generate", "--n", 120, "--sigma", 0.1, "--seed", 1, "--out", a)
    assert code == 0
    info = json.loads(out)
    assert info["entries"] == 7260 and info["density"] == 1.0
    assert info["instance_id"] == "rand-n120-s0.1-seed1"
    assert a.read_text().splitlines()[0] == "qubo 120 7260"
    assert len(a.read_text().splitlines()) == 7261
    run(capsys, "generate", "--n", 120, "--sigma", 0.1, "--seed", 1, "--out", b)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("args", [["--n", "0", "--sigma", "1"], ["--n", "5", "--sigma", "0"], ["--n", "x", "--sigma", "1"]])
def test_generate_usage_errors(capsys, args):
    with pytest.raises(SystemExit) as exc:
        main(["generate", *args])
    assert exc.value.code == 2


def test_solve_fixture(capsys, tri_file):
    code, out, _ = run(capsys, "solve", "--in", tri_file, "--solver", "bf")
    assert code == 0
    res = json.loads(out)
    assert res["energy"] == -1.0
    assert unpack_bits(res["bits"]).tolist() == [1, 1]
    assert res["solver_id"] == "bf" and "solve_time_s" in res and "metadata" in res


def test_solve_routes_decomposition(capsys, tmp_path):
    p = tmp_path / "q.qubo"
    run(capsys, "generate", "--n", 60, "--sigma", 0.1, "--seed", 3, "--out", p)
    code, out, _ = run(capsys, "solve", "--in", p, "--solver", "qbsolv-like:ts", "--sub-size", 30, "--timeout-ms", 5)
    assert code == 0
    res = json.loads(out)
    assert res["solver_id"] == "qbsolv-like:ts"
    assert res["metadata"]["sub_size"] == 30
    assert set(res["metadata"]["inner_calls_per_round"]) == {2}
    Q = read_qubo(p)
    assert energy(Q, unpack_bits(res["bits"])) == pytest.approx(res["energy"], abs=1e-9)


def test_solve_deterministic(capsys, tmp_path):
    p = tmp_path / "q.qubo"
    run(capsys, "generate", "--n", 40, "--sigma", 1, "--seed", 2, "--out", p)
    outs = [json.loads(run(capsys, "solve", "--in", p, "--solver", "sa", "--seed", 7, "--reads", 20)[1]) for _ in range(2)]
    assert strip_timing(outs[0]) == strip_timing(outs[1])


def test_solve_extra_options(capsys, tri_file):
    code, out, _ = run(capsys, "solve", "--in", tri_file, "--solver", "pticm", "--set", "num_replicas=4", "--sweeps", 10)
    assert code == 0 and json.loads(out)["config"]["num_replicas"] == 4


@pytest.mark.parametrize(
    "args",
    [
        ["--solver", "nope"],
        ["--solver", "qbsolv-like:nope"],
        ["--solver", "sa", "--sub-size", "3"],
        ["--solver", "sa", "--set", "bogus=1"],
        ["--solver", "sa", "--set", "noequals"],
    ],
)
def test_solve_usage_errors(capsys, tri_file, args):
    code, _, err = run(capsys, "solve", "--in", tri_file, *args)
    assert code == 2 and "error" in err


def test_solve_runtime_failures(capsys, tmp_path, tri_file):
    big = tmp_path / "big.qubo"
    run(capsys, "generate", "--n", 30, "--sigma", 1, "--out", big)
    assert run(capsys, "solve", "--in", big, "--solver", "bf")[0] == 1
    assert run(capsys, "solve", "--in", tmp_path / "missing.qubo", "--solver", "sa")[0] == 1
    bad = tmp_path / "bad.qubo"
    bad.write_text("qubo 2 1\n0 x 1\n")
    code, _, err = run(capsys, "solve", "--in", bad, "--solver", "sa")
    assert code == 1 and "line 2" in err


def test_export_lp_and_import(capsys, tmp_path, tri_file):
    lp = tmp_path / "tri.lp"
    code, _, _ = run(capsys, "export", "--in", tri_file, "--format", "lp-text", "--out", lp)
    assert code == 0 and "Minimize" in lp.read_text()
    sol = tmp_path / "tri.sol"
    sol.write_text("x0 1\nx1 1\n")
    code, out, _ = run(capsys, "export", "--in", tri_file, "--import-solution", sol, "--best", -1)
    res = json.loads(out)
    assert code == 0 and res["energy"] == -1.0 and res["relative_accuracy"] == 1.0
    native = tmp_path / "copy.qubo"
    run(capsys, "export", "--in", tri_file, "--format", "native", "--out", native)
    assert native.read_text() == "qubo 2 3\n0 0 1.0\n0 1 -3.0\n1 1 1.0\n"


def test_export_unknown_format(tri_file):
    with pytest.raises(SystemExit) as exc:
        main(["export", "--in", str(tri_file), "--format", "mps", "--out", "x"])
    assert exc.value.code == 2


def test_gset_to_qubo(capsys, tmp_path):
    g = tmp_path / "g.txt"
    g.write_text(format_gset(Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])))
    out_path = tmp_path / "g.qubo"
    code, out, _ = run(capsys, "gset-to-qubo", "--in", g, "--out", out_path)
    info = json.loads(out)
    assert code == 0 and info["edges"] == 3 and info["density_percent"] == "100.0000"
    code, out, _ = run(capsys, "solve", "--in", out_path, "--solver", "bf")
    assert json.loads(out)["energy"] == -2.0
    g.write_text("3 2\n1 2 1\n")
    code, _, err = run(capsys, "gset-to-qubo", "--in", g, "--out", out_path)
    assert code == 1 and "declares 2" in err


def test_threads_env_var(tmp_path, tri_file):
    base = [sys.executable, "-m", "qubosmith.cli", "solve", "--in", str(tri_file), "--solver", "sa", "--reads", "4"]
    ok = subprocess.run(base, env={"QUBOSMITH_THREADS": "1", "PATH": ""}, capture_output=True, text=True)
    assert ok.returncode == 0, ok.stderr
    bad = subprocess.run(base, env={"QUBOSMITH_THREADS": "many", "PATH": ""}, capture_output=True, text=True)
    assert bad.returncode == 2 and "QUBOSMITH_THREADS" in bad.stderr


def test_console_exit_code_for_usage(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qubosmith.cli", "generate", "--n", "0", "--sigma", "1"], capture_output=True)
    assert r.returncode == 2
