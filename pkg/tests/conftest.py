import pytest

from flatpsi.scenario import data_path, load_scenario

_criteria: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _criteria.setdefault(name, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        ok = all(o == "passed" for o in _criteria[name])
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")


@pytest.fixture(scope="session")
def golden_scenario():
    return load_scenario(data_path("commuting_golden.json"))


@pytest.fixture(scope="session")
def abelian_scenario():
    return load_scenario(data_path("abelian_p_lt_r.json"))


@pytest.fixture(scope="session")
def boundary_scenario():
    return load_scenario(data_path("boundary_chain.json"))


@pytest.fixture(scope="session")
def golden_psi(golden_scenario):
    from flatpsi.fiber import psi

    sc = golden_scenario
    _, chain = sc.chain(None)
    return psi(chain, sc.connections[sc.reference], sc.polynomial, sc.connections)
