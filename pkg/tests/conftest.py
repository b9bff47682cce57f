import numpy as np
import pytest

from vekua import Domain, make_grid


@pytest.fixture(scope="session")
def disc():
    return Domain.disc()


@pytest.fixture(scope="session")
def disc_grid_32(disc):
    return make_grid(disc, 32)


@pytest.fixture(scope="session")
def point_grid_32(disc):
    return make_grid(disc, 32, [0j])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def observed_order(errors, factor=2.0):
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(factor)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
