import pytest

from hybridsim import scenarios as sc
from hybridsim.engine import SimulationInstance
from hybridsim.model import Mapping, load_application, load_system

# filled by the acceptance tests, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_instance(system_doc, app_doc, nested_mapping, params=None, idle_scope="allocated"):
    system = load_system(system_doc)
    appdoc = load_application(app_doc)
    return SimulationInstance(system, appdoc.app, appdoc.caps, Mapping.from_nested(nested_mapping),
                              dict(params or {}), appdoc.cost_models, idle_scope)


@pytest.fixture
def tiny_instance():
    return make_instance(sc.tiny_system(), sc.tiny_application(),
                         {"cpu0": {"master": 1}, "gpu0": {"slave": 1}})


@pytest.fixture(scope="session")
def dnn_system():
    return load_system(sc.dnn_system())


def farm_instance(behavior="task_farm", params=None, system_kw=None, **args):
    system = sc.farm_system(**(system_kw or {}))
    return make_instance(system, sc.farm_application(system, behavior, **args),
                         sc.farm_mapping(system), params)
