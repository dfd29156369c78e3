import os
from importlib import resources

import pytest

ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if marker:
        ACCEPTANCE.append((marker, report.outcome))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", f"{m.args[0]:<3} {m.args[1]}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in sorted(ACCEPTANCE, key=lambda r: _order(r[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")


def _order(label):
    num = label.split()[0]
    return (int("".join(ch for ch in num if ch.isdigit())), num)


@pytest.fixture(scope="session")
def toy_dir():
    return os.fspath(resources.files("ocralign") / "data" / "toy")
