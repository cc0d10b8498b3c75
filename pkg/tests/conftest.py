import warnings

import pytest

from isolab.geometry import build_domain, build_ellipse, disk, running_example


@pytest.fixture(scope="session")
def pair():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return running_example()


@pytest.fixture(scope="session")
def half_ellipse():
    return build_domain(build_ellipse(2.0, 1.0))


@pytest.fixture(scope="session")
def disk_ground():
    from isolab.spectral import ground_state
    return ground_state(disk())


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in lines:
            terminalreporter.write_line(ln)
