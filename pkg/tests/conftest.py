import shutil
from pathlib import Path

import pytest

from itava import load_model
from itava.smt import resolve_solver_path

MODELS = Path(__file__).resolve().parent.parent / "models"
CORPUS = sorted(MODELS.glob("*.pita"))

# one line per acceptance criterion, printed in the terminal summary
RESULTS = {}


def z3_path():
    return resolve_solver_path() or shutil.which("z3")


needs_z3 = pytest.mark.skipif(z3_path() is None, reason="no external SMT solver found")


@pytest.fixture(scope="session")
def z3():
    path = z3_path()
    if path is None:
        pytest.skip("no external SMT solver found")
    return path


@pytest.fixture(scope="session")
def a1():
    return load_model(MODELS / "a1.pita")


@pytest.fixture(scope="session")
def a2():
    return load_model(MODELS / "a2.pita")


@pytest.fixture(scope="session")
def pi_ref():
    return {"p1": 5, "p2": -1}


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, seconds, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({seconds:.1f} s) {detail}")
