import os
from pathlib import Path

import pytest

from lrcrystal import couplings
from lrcrystal.geometry import builtin_lattice
from lrcrystal.zcell import enumerate_cells, extent_set

SLOW = bool(os.environ.get("LRCRYSTAL_SLOW"))


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="long run; set LRCRYSTAL_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def cache(tmp_path_factory):
    # a persistent directory makes repeated local runs fast
    path = os.environ.get("LRCRYSTAL_TEST_CACHE")
    return couplings.CouplingCache(Path(path) if path else tmp_path_factory.mktemp("couplings"))


@pytest.fixture(scope="session")
def matrices(cache):
    memo = {}

    def get(lattice, family, m, alpha, index_filter=None):
        key = (lattice, family, m, alpha)
        if key not in memo:
            cells = enumerate_cells(extent_set(family, m))
            memo[key] = couplings.matrices_for(builtin_lattice(lattice), cells,
                                               couplings.ResumParams(alpha), cache)
        mats = memo[key]
        return [cm for cm in mats if index_filter is None or index_filter(cm.cell.zcell.index)]

    return get


# -- acceptance report ----------------------------------------------------------

_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """``criterion(tag, ok, detail)`` logs one PASS/FAIL line for the acceptance summary."""
    def record(tag: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_runtest_logreport(report):
    if report.skipped and "test_acceptance" in report.nodeid and report.when == "setup":
        _ACCEPTANCE.append(f"[SKIP] {report.nodeid.split('::')[-1]}: long tier, set LRCRYSTAL_SLOW=1")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
