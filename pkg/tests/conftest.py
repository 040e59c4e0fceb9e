"""Shared fixtures. Key generation is slow, so identities are session-scoped."""

from __future__ import annotations

import pytest

from webcas.webid import IdentityBundle, generate_identity


@pytest.fixture(scope="session")
def student_identity() -> IdentityBundle:
    return generate_identity("Stu Dent", "http://example.org/StudentWebID#me", 365)


@pytest.fixture(scope="session")
def second_identity() -> IdentityBundle:
    return generate_identity("Stu Dent", "http://example.org/StudentWebID#me", 365)


# Tests marked `acceptance` are the package's binding checks; the summary
# below prints one verdict line per criterion after every run.

_criteria: "dict[str, tuple[int, str]]" = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(number, label): binding acceptance check, one verdict line per criterion",
    )


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _criteria[item.nodeid] = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    by_test = {}
    for status, verdict in (("passed", "pass"), ("failed", "FAIL"), ("error", "FAIL"), ("skipped", "skip")):
        for report in terminalreporter.stats.get(status, ()):
            nodeid = getattr(report, "nodeid", None)
            if nodeid in _criteria:
                by_test[nodeid] = verdict
    rollup: "dict[tuple[int, str], list[str]]" = {}
    for nodeid, key in _criteria.items():
        rollup.setdefault(key, []).append(by_test.get(nodeid, "not run"))
    terminalreporter.section("acceptance criteria")
    for (number, label), verdicts in sorted(rollup.items()):
        if "FAIL" in verdicts:
            verdict = "FAIL"
        elif "not run" in verdicts or "skip" in verdicts:
            verdict = "not run" if "not run" in verdicts else "skip"
        else:
            verdict = "pass"
        terminalreporter.write_line(f"criterion {number}: {label} ... {verdict}")
