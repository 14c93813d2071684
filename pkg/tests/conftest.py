import pytest

from spdcsim.config import SourceConfig
from spdcsim.dispersion import SellmeierSet, load_material
from spdcsim.pipeline import build_source


@pytest.fixture(scope="session")
def gayer():
    return load_material("mgo_cln_gayer2008")


@pytest.fixture(scope="session")
def default_source():
    return build_source(SourceConfig())


@pytest.fixture(scope="session")
def toy_material():
    return SellmeierSet.constant(2.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
