import json
import subprocess
import sys

import pytest

from commlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def eq2(tmp_path):
    p = tmp_path / "eq2.txt"
    p.write_text("2 4 4\n1000\n0100\n0010\n0001\n")
    return str(p)


def test_f2_exhaustive_example(capsys):
    code, out, _ = run(capsys, "sketch", "f2", "--n", "4", "--stream", "1,1,2", "--exhaustive")
    assert code == 0
    lines = out.splitlines()
    assert "E[X]=5/1" in lines
    assert "E[X2]<=3F2^2: true" in lines
    assert "F2=5" in lines


def test_cover_example(capsys, eq2):
    code, out, _ = run(capsys, "analyze", "cover", "--matrix", eq2, "--value", "1")
    assert code == 0
    assert "min_cover=4" in out.splitlines()


def test_zero_cover_of_identity(capsys, eq2):
    _, out, _ = run(capsys, "analyze", "cover", "--matrix", eq2, "--value", "0")
    # the off-diagonal of the 4x4 identity needs 4 rectangles too
    assert "min_cover=4" in out.splitlines()


@pytest.mark.parametrize("argv", [
    ("sketch", "f2", "--n", "16", "--stream", "1,2,2,5,9", "--seed", "11", "--t", "8"),
    ("sketch", "morris", "--n", "4", "--stream", "1,2,3,4", "--seed", "3", "--trials", "5"),
    ("protocol", "eq", "--x", "0110", "--y", "0111", "--seed", "9", "--reps", "3"),
    ("test", "blr", "--n", "3", "--seed", "4", "--trials", "5"),
    ("test", "mono", "--n", "3", "--seed", "4", "--trials", "5"),
    ("ann", "query", "--d", "12", "--n", "6", "--seed", "2"),
])
@pytest.mark.parametrize("fmt", ["text", "csv", "json"])
def test_repeat_runs_are_byte_identical(capsys, argv, fmt):
    first = run(capsys, *argv, "--format", fmt)
    second = run(capsys, *argv, "--format", fmt)
    assert first[0] == 0
    assert first[1] == second[1]


def test_csv_columns(capsys, eq2):
    _, out, _ = run(capsys, "analyze", "cover", "--matrix", eq2, "--format", "csv")
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    assert lines[1] == "metric,value,exact,notes"
    assert "min_cover,4,true," in lines


def test_json_report(capsys):
    _, out, _ = run(capsys, "polytope", "perm", "--n", "3", "--objective=-1,2,3", "--format", "json")
    obj = json.loads(out)
    assert obj["header"]["command"] == "polytope perm"
    rows = {r["metric"]: r["value"] for r in obj["rows"]}
    assert rows["lp_value"] == "12/1"
    assert rows["constraints"] == "18"
    assert rows["matches_brute_force"] == "true"


def test_out_file(capsys, tmp_path):
    target = tmp_path / "r.txt"
    code, out, _ = run(capsys, "sketch", "finf", "--n", "5", "--stream", "1,1,2", "--out", str(target))
    assert code == 0 and out == ""
    assert "Finf=2" in target.read_text().splitlines()


@pytest.mark.parametrize("argv", [
    ("suite", "nope"),
    ("test", "blr"),
    ("analyze", "cover", "--matrix", "/nonexistent/m.txt"),
    ("sketch", "finf", "--n", "3", "--stream", "1,7"),
    ("sketch", "f2", "--n", "3", "--stream", "1,x", "--seed", "1"),
    ("protocol", "cis", "--n", "3", "--edges", "0-1", "--clique", "0,2", "--indep", "1"),
])
def test_bad_input_exits_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err.startswith("commlab: ")


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sketch", "nosuch"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("COMMLAB_THREADS", "0")
    code, _, err = run(capsys, "sketch", "finf", "--n", "3")
    assert code == 2 and "COMMLAB_THREADS" in err


def test_malformed_matrix(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 2 2\n10\n0\n")
    code, _, err = run(capsys, "analyze", "detcc", "--matrix", str(p))
    assert code == 2 and "cells" in err


def test_suite_quick(capsys):
    code, out, err = run(capsys, "suite", "lecture1", "--quick")
    assert code == 0
    rows = [line for line in out.splitlines() if line.startswith("criterion_")]
    assert len(rows) == 3
    assert all(": true" in line for line in rows)
    # timings only on stderr
    assert "criterion 1:" in err and "criterion 1:" not in out


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "commlab", "sketch", "finf", "--n", "4",
                          "--stream", "2,2,3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "Finf=2" in res.stdout.splitlines()
