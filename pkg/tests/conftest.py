"""Collects acceptance outcomes and prints one verdict line per criterion."""

from collections import defaultdict

import pytest

ACCEPTANCE_TITLES = {
    1: "exact certification of the built-in schemes",
    2: "cosh ODE tables",
    3: "heat equation tables",
    4: "1D Allen-Cahn traveling wave tables and front speed",
    5: "2D Allen-Cahn observed orders",
    6: "2D Cahn-Hilliard orders and mass conservation",
    7: "nonsmooth ODE average order and energy decay",
    8: "stability stress matrix",
    9: "oracle equivalences",
    10: "coefficient search from the command line",
    11: "finite-difference gradient checks",
}

_results = defaultdict(list)


class AcceptanceRecorder:
    """Records named sub-checks under a criterion number."""

    def check(self, criterion, label, ok, detail=""):
        _results[criterion].append((label, bool(ok), detail))
        return bool(ok)


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        checks = _results.get(n)
        if not checks:
            tr.write_line(f"criterion {n:2d}: NOT RUN  {title}")
            continue
        failed = [c for c in checks if not c[1]]
        verdict = "PASS" if not failed else "FAIL"
        tr.write_line(f"criterion {n:2d}: {verdict}  {title} ({len(checks) - len(failed)}/{len(checks)} checks)")
        for label, _, detail in failed:
            tr.write_line(f"    failed: {label} {detail}")
