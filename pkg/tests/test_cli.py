import json
import subprocess
import sys

from conftest import MODELS, needs_z3
from itava.cli import cli

A2 = str(MODELS / "a2.pita")
A1 = str(MODELS / "a1.pita")


def run(argv, capsys):
    code = cli(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_check(capsys):
    code, out, _ = run(["check", A2], capsys)
    assert code == 0 and out.startswith("A2: 2 levels, 2 parameters")


def test_check_reports_violations_with_lines(tmp_path, capsys):
    bad = tmp_path / "bad.pita"
    bad.write_text("ita V { levels 2; level 1 { main x1; } level 2 { main x2; }\n"
                   "state a level 1 init; state b level 2;\n"
                   "trans a -> b do x1 := x2; }\n")
    code, out, _ = run(["check", str(bad), "--json", str(tmp_path / "v.json")], capsys)
    assert code == 3
    assert "line 3" in out and "x1" in out
    assert json.loads((tmp_path / "v.json").read_text())["valid"] is False


def test_parse_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "broken.pita"
    bad.write_text("ita X { levels 1 }")
    code, _, err = run(["reach", str(bad)], capsys)
    assert code == 3 and "1:" in err


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 64
    assert run(["reach", A2, "--mode", "bogus"], capsys)[0] == 64
    assert run(["frobnicate"], capsys)[0] == 64


def test_missing_file(capsys):
    assert run(["check", "/nonexistent.pita"], capsys)[0] == 3


@needs_z3
def test_reach_yes_and_no(z3, capsys, tmp_path):
    code, out, _ = run(["reach", A2, "--target", "q2", "--solver", z3, "--json", str(tmp_path / "r.json")],
                       capsys)
    assert code == 0 and out.startswith("answer: Yes")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["answer"] == "Yes" and doc["witness_path"] == ["t0 a q1->q2"]
    code, out, _ = run(["reach", A2, "--mode", "forall", "--solver", z3], capsys)
    assert code == 1 and "answer: No" in out


@needs_z3
def test_scoped_reach(z3, capsys, tmp_path):
    scope = tmp_path / "scope.txt"
    scope.write_text("p1 <= 0 and p2 = 0\n")
    code, out, _ = run(["reach", A2, "--scope", str(scope), "--solver", z3], capsys)
    assert code == 1 and "answer: No" in out


def test_unknown_target_is_an_analysis_error(capsys):
    code, _, err = run(["reach", A1, "--target", "nowhere"], capsys)
    assert code == 4 and "unknown target" in err


@needs_z3
def test_outputs_are_byte_identical(z3, tmp_path, capsys):
    pi = tmp_path / "pi.txt"
    pi.write_text("p1 = 5; p2 = -1\n")
    files = []
    for i in range(2):
        dot, js, rj = tmp_path / f"g{i}.dot", tmp_path / f"g{i}.json", tmp_path / f"r{i}.json"
        assert run(["graph", A2, "--pi", str(pi), "--dot", str(dot), "--json", str(js)], capsys)[0] == 0
        assert run(["reach", A2, "--solver", z3, "--json", str(rj)], capsys)[0] == 0
        files.append((dot.read_bytes(), js.read_bytes(), rj.read_bytes()))
    assert files[0] == files[1]
    assert json.loads(files[0][1])["classes"] == 28


def test_graph_dump(tmp_path, capsys):
    pi = tmp_path / "pi.txt"
    pi.write_text("p1 = 5\np2 = -1\n")
    code, out, _ = run(["graph", A2, "--pi", str(pi), "--dump-classes"], capsys)
    assert code == 0 and "28 classes, 36 edges" in out and "c13 -t1-> c18" in out


def test_simulate(tmp_path, capsys):
    pi = tmp_path / "pi.txt"
    pi.write_text("p1 = 5; p2 = -1")
    code, out, _ = run(["simulate", A2, "--pi", str(pi), "--steps", "4", "--seed", "2"], capsys)
    assert code == 0 and out.splitlines()[0].startswith("q1 | x1=0,x2=0")
    assert out == run(["simulate", A2, "--pi", str(pi), "--steps", "4", "--seed", "2"], capsys)[1]


def test_exprsets_bounds(capsys):
    code, out, _ = run(["exprsets", A2, "--bounds"], capsys)
    assert code == 0
    assert "PolPar 1 + p1*p2 - 4*p2^3" in out and "|E_2| = 5 <= 48" in out


@needs_z3
def test_regions_listing_contains_the_reference_region(z3, tmp_path, capsys):
    scope = tmp_path / "scope.txt"
    scope.write_text("p1 = 5 and p2 = -1")
    code, out, _ = run(["regions", A2, "--solver", z3, "--scope", str(scope)], capsys)
    assert code == 0
    for atom in ("p2 < 0", "1 + p2 = 0", "1 - p1 + 4*p2^2 = 0", "1 + p1*p2 - 4*p2^3 = 0"):
        assert f"  {atom}" in out
    assert out.rstrip().endswith("1 regions, 0 inconclusive")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "itava", "check", A1], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("A1:")
