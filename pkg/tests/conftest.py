"""Collects acceptance-criterion verdicts and prints them at the end of the run."""

import pytest

CRITERIA = {
    1: "normalization of the 3-D spinor",
    2: "branch kinematics",
    3: "collapse statistics",
    4: "spin-x probability law",
    5: "N/2 tallies",
    6: "non-signaling",
    7: "steering signature",
    8: "negative-result collapse",
    9: "determinism",
    10: "Schrodinger residual diagnostic",
}

_results_key = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_results_key] = {}


@pytest.fixture
def acceptance(request):
    """Call ``acceptance(n, passed, detail)`` to record criterion ``n``."""
    results = request.config.stash[_results_key]

    def record(n, passed, detail):
        results[n] = (bool(passed), detail)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_results_key]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        passed, detail = results.get(n, (False, "not run or errored before recording"))
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {n:2d}. {name}: {detail}")
