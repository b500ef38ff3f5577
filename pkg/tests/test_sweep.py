import csv
import io
import json

import pytest

from hybridsim import scenarios as sc
from hybridsim.engine import SimulationResult
from hybridsim.errors import ExpansionError, ParseError, RoutingError
from hybridsim.model import ParamSpace
from hybridsim.sweep import (Enumerate, Fixed, PowerLimit, RoundRobin, Suite, expand_suite,
                             failures, load_instance, load_suite, parse_mapping_source,
                             run_suite, suite_csv)


def dnn_base(epoch=40, **extra):
    doc = {"system": sc.dnn_system(), "application": sc.dnn_application(epoch_archives=epoch),
           "mapping": "round_robin", "params": {"instances.slave": 1}}
    doc.update(extra)
    return load_instance(doc)


def test_nslaves_suite_expands_to_eight():
    suite = Suite(dnn_base(), ParamSpace.from_dict({"instances.slave": {"from": 1, "to": 8}}),
                  RoundRobin())
    insts = expand_suite(suite)
    assert [i.mapping.total("slave") for i in insts] == list(range(1, 9))
    assert [i.params["instances.slave"] for i in insts] == list(range(1, 9))


def test_empty_space_yields_base():
    base = dnn_base()
    assert expand_suite(Suite(base)) == [base]


def test_two_params_lexicographic():
    space = ParamSpace.from_dict({"b": {"values": [10, 20, 30, 40]},
                                  "a": {"values": ["x", "y", "z"]}})
    insts = expand_suite(Suite(dnn_base(), space))
    assert len(insts) == 12
    assert [(i.params["a"], i.params["b"]) for i in insts[:5]] == [
        ("x", 10), ("x", 20), ("x", 30), ("x", 40), ("y", 10)]


def test_enumerate_source_multiplies():
    space = ParamSpace.from_dict({"model_size_b": {"values": [1, 2]}})
    base = dnn_base()
    insts = expand_suite(Suite(base, space, Enumerate(3)))
    assert len(insts) == 6
    assert insts[0].mapping == insts[3].mapping


def test_power_limit_source():
    power = {d.id: 100.0 for d in dnn_base().system.devices if d.kind == "gpu"}
    space = ParamSpace.from_dict({"power_limit_w": {"from": 100, "to": 800, "step": 100}})
    insts = expand_suite(Suite(dnn_base(params={}), space, PowerLimit(0.0, power)))
    assert [i.mapping.total("slave") for i in insts] == list(range(1, 9))


@pytest.mark.parametrize("spec, kind", [(None, Fixed), ("fixed", Fixed),
                                        ("round_robin", RoundRobin), ({"enumerate": 4}, Enumerate),
                                        ({"power_limit": 300}, PowerLimit)])
def test_mapping_source_parsing(spec, kind):
    assert isinstance(parse_mapping_source(spec), kind)


@pytest.mark.parametrize("spec", ["random", {"enumerate": 0}, {"enumerate": "x"}])
def test_bad_mapping_source(spec):
    with pytest.raises(ExpansionError):
        parse_mapping_source(spec)


def test_unbounded_sweep_rejected():
    with pytest.raises(ExpansionError):
        load_suite({"base": {"system": sc.tiny_system(), "application": sc.tiny_application()},
                    "sweep": {"v": {"from": 1, "to": None}}})


def test_run_suite_order_and_determinism():
    suite = Suite(dnn_base(), ParamSpace.from_dict({"instances.slave": {"from": 1, "to": 8}}),
                  RoundRobin())
    insts = expand_suite(suite)
    serial = run_suite(insts, 1)
    parallel = run_suite(insts, 4)
    assert [i for i, _ in parallel] == insts
    assert [r.to_dict() for _, r in serial] == [r.to_dict() for _, r in parallel]
    assert suite_csv(serial, ["instances.slave"]) == suite_csv(parallel, ["instances.slave"])


def test_run_suite_empty_and_bad_workers():
    assert run_suite([], 3) == []
    with pytest.raises(ValueError):
        run_suite([], 0)


def test_error_isolation():
    good = load_instance({"system": sc.tiny_system(), "application": sc.tiny_application(),
                          "mapping": {"cpu0": {"master": 1}, "gpu0": {"slave": 1}}})
    unlinked = dict(sc.tiny_system(), links=[])
    bad = load_instance({"system": unlinked, "application": sc.tiny_application(),
                         "mapping": {"cpu0": {"master": 1}, "gpu0": {"slave": 1}}})
    for workers in (1, 2):
        out = run_suite([good, bad, good], workers)
        assert isinstance(out[0][1], SimulationResult) and isinstance(out[2][1], SimulationResult)
        assert isinstance(out[1][1], RoutingError) and out[1][1].pair == ("cpu0", "gpu0")
        assert [i for i, _ in failures(out)] == [1]


def test_csv_layout():
    good = load_instance({"system": sc.tiny_system(), "application": sc.tiny_application(),
                          "mapping": "round_robin", "params": {"v": 3}})
    text = suite_csv([(good, run_suite([good])[0][1]), (good, RoutingError("a", "b"))], ["v"])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["makespan_s", "avg_power_w", "pareto", "v", "mapping_id", "error"]
    assert rows[1] == ["4.0", "125.0", "true", "3", "cpu0:master=1;gpu0:slave=1", ""]
    assert rows[2][:3] == ["", "", "false"] and rows[2][5].startswith("RoutingError")


def test_load_instance_relative_paths(tmp_path):
    (tmp_path / "sys.json").write_text(json.dumps(sc.tiny_system()))
    (tmp_path / "app.json").write_text(json.dumps(sc.tiny_application()))
    (tmp_path / "map.json").write_text(json.dumps({"cpu0": {"master": 1}, "gpu0": {"slave": 1}}))
    inst = load_instance({"system": "sys.json", "application": "app.json", "mapping": "map.json",
                          "idle_scope": "all"}, tmp_path)
    assert inst.mapping.total("slave") == 1 and inst.idle_scope == "all"
    with pytest.raises(ParseError):
        load_instance({"system": "missing.json", "application": "app.json"}, tmp_path)
    with pytest.raises(ParseError):
        load_instance({"application": "app.json"}, tmp_path)
