from __future__ import annotations

import pytest

from saycan.evalharness import load_suite
from saycan.planner import PlannerDeps
from saycan.prompting import load_template
from saycan.scoring import TableScorer
from saycan.world import World, data_path, default_world


@pytest.fixture(scope="session")
def kitchen() -> World:
    return default_world("kitchen.json")


@pytest.fixture(scope="session")
def tabletop() -> World:
    return default_world("tabletop.json")


@pytest.fixture(scope="session")
def suite():
    return load_suite(data_path("suite.json"))


@pytest.fixture(scope="session")
def oracle_scorer() -> TableScorer:
    return TableScorer.from_file(data_path("oracle_table.json"))


@pytest.fixture(scope="session")
def default_template():
    return load_template(data_path("prompt_default.json"))


@pytest.fixture(scope="session")
def cot_template():
    return load_template(data_path("prompt_cot.json"))


@pytest.fixture()
def oracle_deps(kitchen, oracle_scorer, default_template, cot_template) -> PlannerDeps:
    return PlannerDeps(kitchen.skills, oracle_scorer, default_template, kitchen.calibration, cot_template=cot_template)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log() -> list[str]:
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
