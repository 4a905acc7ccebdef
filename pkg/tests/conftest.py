import time

import pytest

from vmalloc import Exponential, PolicyTable, SolverConfig, TimeGrid, solve_family

LAM, HORIZON, N0 = 100.0, 12.0, 100
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def expo():
    return Exponential(1.0)


@pytest.fixture(scope="session")
def ref_cfg():
    return SolverConfig(grid=TimeGrid(0.0, HORIZON, 1024))


@pytest.fixture(scope="session")
def ref_family(expo, ref_cfg):
    """Curves N = 1..100 at the reference setting, with the solve time."""
    start = time.perf_counter()
    fam = solve_family(expo, LAM, N0, ref_cfg)
    return fam, time.perf_counter() - start


@pytest.fixture(scope="session")
def ref_table(expo, ref_family):
    fam, _ = ref_family
    curves = {(0, c.n_vms): c for c in fam}
    return PolicyTable(expo, HORIZON, (LAM,), N0, curves)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
