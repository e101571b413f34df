from fractions import Fraction

import pytest

from pakcheck import build_counterexample, build_tree, builtin_fig1, builtin_fs, builtin_fs_refrain


@pytest.fixture(scope="session")
def fs():
    return build_tree(builtin_fs())


@pytest.fixture(scope="session")
def refrain():
    return build_tree(builtin_fs_refrain())


@pytest.fixture(scope="session")
def fig1():
    return builtin_fig1()


@pytest.fixture(scope="session")
def cx():
    return build_counterexample(Fraction(9, 10), Fraction(1, 100))



_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "FAIL"
        if _CRITERIA.get(n, (title, "PASS"))[1] == "FAIL":
            status = "FAIL"
        _CRITERIA[n] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")
