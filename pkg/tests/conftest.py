import numpy as np
import pytest

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def within_sigmas(observed: float, expected: float, n: int, k: float = 4.0) -> bool:
    """Binomial check using the expected rate's standard error."""
    se = np.sqrt(expected * (1 - expected) / n)
    return abs(observed - expected) <= k * se + 1e-12


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE.append((name, "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{outcome}  {name}  {detail}".rstrip())
