import re

import pytest

TITLES = {
    1: "classical sharpness (triangle, 3-simplex)",
    2: "Gaussian halfspace equality",
    3: "quantile identity for I_gamma",
    4: "Gaussian bound dominates t/e",
    5: "s-bound and C(n, p) consistency",
    6: "1-D extremal densities, three regimes",
    7: "n-D extremal bodies under Monte Carlo",
    8: "no-bound family below s = -1",
    9: "CDF-Grunbaum inequality",
    10: "quantile-integral routes and closed-form audit",
    11: "gamma-transport suite",
    12: "randomized inequality battery",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one of the twelve acceptance criteria")


@pytest.hookimpl(trylast=True)
def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    crit = props.get("criterion")
    if crit is None:
        m = re.search(r"test_criterion_(\d+)", report.nodeid)
        if not m:
            return
        crit = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = props.get("detail", "")
        if report.failed and not detail:
            detail = report.longrepr.reprcrash.message if hasattr(
                report.longrepr, "reprcrash") else "error"
        _outcomes[crit] = (report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(TITLES):
        if crit not in _outcomes:
            continue
        ok, detail = _outcomes[crit]
        tr.write_line(f"criterion {crit:2d} {'PASS' if ok else 'FAIL'}  {TITLES[crit]}: {detail}")
