import functools
import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

import xppn  # noqa: E402
from xppn import benders, cli, heuristic, touring  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []

# Every in-process touring and Benders run of the session, for the log checks.
# Installed at import time so that test modules pick up the wrapped functions.
TOURING_RUNS: list = []  # (instance, solution)
BENDERS_RUNS: list = []  # (lb_history, ub_history)


def _record_touring(fn):
    @functools.wraps(fn)
    def wrapper(inst, tour, cfg=None, collapse=None):
        sol = fn(inst, tour, cfg, collapse)
        TOURING_RUNS.append((inst, sol))
        return sol
    return wrapper


def _record_benders(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        res = fn(*args, **kwargs)
        BENDERS_RUNS.append((res.lb_history, res.ub_history))
        return res
    return wrapper


_solve = _record_touring(touring.solve_fixed_tour)
for mod in (touring, benders, heuristic, xppn):
    mod.solve_fixed_tour = _solve
_bsolve = _record_benders(benders.benders_solve)
for mod in (benders, cli, xppn):
    mod.benders_solve = _bsolve


def pytest_collection_modifyitems(session, config, items):
    # the acceptance suite audits the runs of every other test, so it goes last
    items.sort(key=lambda it: it.fspath.basename == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
