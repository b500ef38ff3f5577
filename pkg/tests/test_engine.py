import math

import pytest
from hypothesis import given, settings, strategies as st

from hybridsim import scenarios as sc
from hybridsim.behaviors import behavior
from hybridsim.costs import power_at
from hybridsim.engine import ANY, SimulationInstance, TraceRecord, integrate_energy, simulate
from hybridsim.errors import (DeadlockError, InfeasibleMappingError, ModelDomainError,
                              ParameterError, RoutingError, TraceError)
from hybridsim.model import Mapping, load_system

from conftest import make_instance


def rel(a, b):
    return abs(a - b) <= 1e-9 * max(abs(a), abs(b), 1e-300)


# -- small systems ------------------------------------------------------------------


def line_system(n=2, bandwidth=1.0, t_startup=0.0, extra_idle=None):
    devs = [{"id": f"d{i}", "kind": "cpu", "performance": 1.0, "ncores": 2,
             "p_idle_w": 10.0, "p_peak_w": 30.0} for i in range(n)]
    if extra_idle is not None:
        devs.append({"id": "zz", "kind": "spare", "performance": 1.0, "ncores": 1,
                     "p_idle_w": extra_idle, "p_peak_w": extra_idle})
    links = [{"id": f"l{i}", "a": f"d{i}", "b": f"d{i + 1}", "t_startup_s": t_startup,
              "bandwidth_bps": bandwidth} for i in range(n - 1)]
    return {"devices": devs, "links": links}


def script_app(*procs, caps=None):
    """``procs`` are (name, ops, r_min, r_max) tuples."""
    processes = [{"name": n, "behavior": "script", "args": {"ops": ops}, "r_min": lo,
                  "r_max": hi} for n, ops, lo, hi in procs]
    return {"processes": processes, "capabilities": caps or []}


def pair_instance(a_ops, b_ops, **sys_kw):
    app = script_app(("a", a_ops, 1, 1), ("b", b_ops, 1, 1),
                     caps=[{"device": "d0", "process": "a", "max": 1},
                           {"device": "d1", "process": "b", "max": 1}])
    return make_instance(line_system(**sys_kw), app, {"d0": {"a": 1}, "d1": {"b": 1}})


def ops_of(result, instance):
    return [o for o in result.operations if o.instance == instance]


# -- the tiny scenario -----------------------------------------------------------------


def test_tiny_scenario(tiny_instance):
    r = simulate(tiny_instance)
    assert r.makespan == 4.0
    assert r.avg_power == 125.0
    assert r.max_power == 160.0
    assert r.per_device_energy == {"cpu0": 80.0, "gpu0": 420.0}
    recv = [o for o in ops_of(r, "master:0") if o.label.startswith("recv")]
    assert len(recv) == 1 and recv[0].duration == 3.0 and recv[0].end == 4.0
    gpu_extra = r.per_device_energy["gpu0"] - 70.0 * r.makespan
    assert gpu_extra == 140.0
    assert [(t.time, t.device, t.delta) for t in r.trace] == [(1.0, "gpu0", 1), (3.0, "gpu0", -1)]


def test_result_serialization(tiny_instance):
    d = simulate(tiny_instance).to_dict({"v": 1}, tiny_instance.mapping)
    assert {"makespan_s", "avg_power_w", "max_power_w", "per_device_energy_j", "params",
            "mapping"} <= set(d)
    assert d["mapping"] == {"cpu0": {"master": 1}, "gpu0": {"slave": 1}}


def test_idle_scope_all_counts_unallocated_devices():
    ops_a = [["compute", 4.0]]
    app = script_app(("a", ops_a, 1, 1), caps=[{"device": "d0", "process": "a", "max": 1}])
    sysdoc = line_system(1, extra_idle=50.0)
    alloc = simulate(make_instance(sysdoc, app, {"d0": {"a": 1}}))
    every = simulate(make_instance(sysdoc, app, {"d0": {"a": 1}}, idle_scope="all"))
    assert alloc.makespan == every.makespan == 4.0
    assert alloc.avg_power == 20.0
    assert every.avg_power == 70.0
    assert set(every.per_device_energy) == {"d0", "zz"}
    with pytest.raises(ParameterError):
        simulate(make_instance(sysdoc, app, {"d0": {"a": 1}}, idle_scope="some"))


def test_empty_schedule():
    app = script_app(("a", [], 1, 1), caps=[{"device": "d0", "process": "a", "max": 1}])
    r = simulate(make_instance(line_system(1), app, {"d0": {"a": 1}}))
    assert r.makespan == 0.0
    assert r.avg_power == r.max_power == 10.0


# -- rendezvous ----------------------------------------------------------------------------


def test_rendezvous_charges_waiting_to_the_waiter():
    inst = pair_instance([["send", "b:0", 1, 1.0]], [["compute", 2.0], ["recv", "a:0", 1]])
    r = simulate(inst)
    send, = ops_of(r, "a:0")
    compute, recv = ops_of(r, "b:0")
    assert (send.start, send.end, send.duration) == (0.0, 3.0, 3.0)
    assert (recv.start, recv.end, recv.duration) == (2.0, 3.0, 1.0)
    assert r.makespan == 3.0


def test_mismatched_tags_deadlock():
    inst = pair_instance([["send", "b:0", 1, 1.0]], [["recv", "a:0", 2]])
    with pytest.raises(DeadlockError) as err:
        simulate(inst)
    assert err.value.blocked == ["a:0", "b:0"]


def test_recv_without_sender_deadlocks():
    inst = pair_instance([], [["recv", "a:0", 1]])
    with pytest.raises(DeadlockError) as err:
        simulate(inst)
    assert err.value.blocked == ["b:0"]


def test_unroutable_pair():
    sysdoc = line_system(2)
    sysdoc["links"] = []
    app = script_app(("a", [["send", "b:0", 1, 1.0]], 1, 1), ("b", [["recv", "a:0", 1]], 1, 1),
                     caps=[{"device": "d0", "process": "a", "max": 1},
                           {"device": "d1", "process": "b", "max": 1}])
    with pytest.raises(RoutingError) as err:
        simulate(make_instance(sysdoc, app, {"d0": {"a": 1}, "d1": {"b": 1}}))
    assert err.value.pair == ("d0", "d1")


def test_infeasible_mapping_rejected(tiny_instance):
    bad = SimulationInstance(tiny_instance.system, tiny_instance.app, tiny_instance.caps,
                             Mapping({("gpu0", "slave"): 1}))
    with pytest.raises(InfeasibleMappingError) as err:
        simulate(bad)
    assert err.value.violations[0].clause == "r_min"


def test_negative_model_time_surfaces():
    inst = pair_instance([["compute", 1.0]], [])
    inst = SimulationInstance(inst.system, inst.app, inst.caps, inst.mapping,
                              cost_models={"a.compute": (1.0, -5.0)})
    with pytest.raises(ModelDomainError):
        simulate(inst)


# behaviors used only by the tests below


@behavior("test_fifo", "a")
def _fifo_sender(ctx):
    h1 = yield ctx.isend("b:0", 7, 1.0, "first")
    h2 = yield ctx.isend("b:0", 7, 1.0, "second")
    yield ctx.wait(h1, h2)


@behavior("test_fifo", "b")
def _fifo_receiver(ctx):
    got = []
    for _ in range(2):
        got.append((yield ctx.recv("a:0", 7)).payload)
    yield ctx.compute(1.0 if got == ["first", "second"] else 100.0)


@behavior("test_any", "master")
def _any_master(ctx):
    first = yield ctx.recv(ANY, 1)
    second = yield ctx.recv(ANY, 1)
    # encode arrival order in the makespan
    yield ctx.compute(10.0 if (first.source, second.source) == ("w:1", "w:0") else 1000.0)


@behavior("test_any", "w")
def _any_worker(ctx):
    yield ctx.compute(5.0 - 3.0 * ctx.rank)
    yield ctx.send("master:0", 1, 0.0)


@behavior("test_fetch")
def _fetcher(ctx):
    h = yield ctx.ifetch("d1", 4.0)
    yield ctx.compute(1.0)
    yield ctx.wait(h)
    yield ctx.fetch("d1", 2.0)


def _two_role_instance(name, roles, nested, n=2):
    app = {"processes": [{"name": p, "behavior": name, "r_min": lo, "r_max": hi}
                         for p, lo, hi in roles],
           "capabilities": [{"device": d, "process": p, "max": c}
                            for d, row in nested.items() for p, c in row.items()]}
    return make_instance(line_system(n), app, nested)


def test_fifo_per_channel():
    r = simulate(_two_role_instance("test_fifo", [("a", 1, 1), ("b", 1, 1)],
                                    {"d0": {"a": 1}, "d1": {"b": 1}}))
    assert r.makespan == 3.0


def test_wildcard_recv_takes_earliest_sender():
    inst = _two_role_instance("test_any", [("master", 1, 1), ("w", 2, 2)],
                              {"d0": {"master": 1}, "d1": {"w": 2}})
    r = simulate(inst)
    assert r.makespan == 15.0


def test_one_sided_fetch_overlaps_compute():
    app = {"processes": [{"name": "f", "behavior": "test_fetch", "r_min": 1, "r_max": 1}],
           "capabilities": [{"device": "d0", "process": "f", "max": 1}]}
    r = simulate(make_instance(line_system(2), app, {"d0": {"f": 1}}))
    assert r.makespan == 6.0
    # the remote device hosts nothing, so it is outside the allocated scope
    assert set(r.per_device_energy) == {"d0"}


def test_k_instances_on_one_device_match_single_chain():
    ops = [["compute", 3.0], ["compute", 1.5, 2]]
    one = script_app(("s", ops, 1, 1), caps=[{"device": "d0", "process": "s", "max": 4}])
    four = script_app(("s", ops, 4, 4), caps=[{"device": "d0", "process": "s", "max": 4}])
    r1 = simulate(make_instance(line_system(1), one, {"d0": {"s": 1}}))
    r4 = simulate(make_instance(line_system(1), four, {"d0": {"s": 4}}))
    assert r1.makespan == r4.makespan == 4.5
    # 4 instances demand more cores than exist; power saturates at the peak
    assert r4.max_power == 30.0


# -- energy integration --------------------------------------------------------------------


def test_integrate_half_load():
    sysm = load_system(line_system(1))
    trace = [TraceRecord(0.0, "d0", 2, "x"), TraceRecord(5.0, "d0", -2, "x")]
    energy, avg, peak = integrate_energy(trace, sysm, ["d0"], 10.0)
    assert avg == 10.0 + (30.0 - 10.0) / 2
    assert peak == 30.0 and energy == {"d0": 200.0}


def test_integrate_empty():
    sysm = load_system(line_system(2))
    assert integrate_energy([], sysm, ["d0", "d1"], 0.0) == ({"d0": 0.0, "d1": 0.0}, 20.0, 20.0)


def test_malformed_traces():
    sysm = load_system(line_system(1))
    with pytest.raises(TraceError):
        integrate_energy([TraceRecord(0.0, "d0", -1, "x")], sysm, ["d0"], 1.0)
    with pytest.raises(TraceError):
        integrate_energy([TraceRecord(2.0, "d0", 1, "x"), TraceRecord(1.0, "d0", -1, "x")],
                         sysm, ["d0"], 3.0)


# -- serial-chain oracle ------------------------------------------------------------------------


chain_step = st.tuples(st.floats(0, 50), st.integers(1, 3), st.floats(0, 20), st.floats(0, 50),
                       st.floats(0, 20))


@settings(max_examples=120, deadline=None)
@given(st.lists(chain_step, min_size=1, max_size=8), st.floats(0, 0.5), st.floats(0.5, 4))
def test_ping_pong_chain_matches_closed_form(steps, t_startup, bandwidth):
    """a computes, ships to b, b computes, ships back; everything is serial."""
    a_ops, b_ops = [], []
    expected = 0.0
    extra_a = extra_b = 0.0
    for i, (wa, demand, out_b, wb, back_b) in enumerate(steps):
        a_ops += [["compute", wa, demand], ["send", "b:0", i, out_b], ["recv", "b:0", 100 + i]]
        b_ops += [["recv", "a:0", i], ["compute", wb], ["send", "a:0", 100 + i, back_b]]
        comm = (t_startup + out_b / bandwidth) + (t_startup + back_b / bandwidth)
        expected += wa + wb + comm
        extra_a += wa * (min(demand / 2, 1) * 20.0)
        extra_b += wb * (0.5 * 20.0)
    inst = pair_instance(a_ops, b_ops, t_startup=t_startup, bandwidth=bandwidth)
    r = simulate(inst)
    assert math.isclose(r.makespan, expected, rel_tol=1e-9, abs_tol=1e-12)
    energy = 20.0 * r.makespan + extra_a + extra_b
    assert math.isclose(r.total_energy, energy, rel_tol=1e-9, abs_tol=1e-9)
    # each instance's time is the sum of its operation durations
    for addr in ("a:0", "b:0"):
        total = sum(o.duration for o in ops_of(r, addr))
        assert math.isclose(total, r.per_process_time[addr], rel_tol=1e-9, abs_tol=1e-12)
    assert r.makespan == max(r.per_process_time.values())
    if r.makespan > 0:
        assert math.isclose(r.avg_power * r.makespan, r.total_energy, rel_tol=1e-9)
    again = simulate(inst)
    assert again.trace == r.trace and again.makespan == r.makespan


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["a", "b"]), st.floats(0.01, 10), st.integers(1, 4)),
                min_size=1, max_size=10))
def test_segment_power_bounded_by_scope(computes):
    a_ops = [["compute", w, d] for who, w, d in computes if who == "a"]
    b_ops = [["compute", w, d] for who, w, d in computes if who == "b"]
    r = simulate(pair_instance(a_ops, b_ops))
    sysm = load_system(line_system(2))
    devices = [sysm.device("d0"), sysm.device("d1")]
    active = {"d0": 0, "d1": 0}
    for rec in r.trace:
        active[rec.device] += rec.delta
        total = sum(power_at(d, active[d.id]) for d in devices)
        assert 20.0 <= total <= 60.0
    assert 20.0 <= r.avg_power <= 60.0 and r.max_power <= 60.0
    assert math.isclose(r.avg_power * r.makespan, r.total_energy, rel_tol=1e-9)


def test_dnn_single_slave_serial_sum(dnn_system):
    archives = [1.0e8, 2.0e8, 1.5e8]
    app = sc.dnn_application(archives, epoch_archives=30)
    inst = make_instance(sc.dnn_system(), app, sc.dnn_mapping(1))
    r = simulate(inst)
    link = dnn_system.link_map["pcie_h0gpu0"]
    comm = link.t_startup + sc.DNN_MODEL_B / link.bandwidth
    expected = sum(2 * comm + (archives[i % 3] / 1e6 + 2.0) for i in range(30))
    assert rel(r.makespan, expected)
