"""Deterministic discrete-event simulation of mapped process instances.

Every process instance runs its behavior program as a Python generator.  The
generator yields operations (compute, send, recv, fetch, wait) and the engine
resumes it when the operation finishes.  Communication between instances is
rendezvous-style: a transfer starts once both sides have posted and lasts
``comm_time`` over the route between their devices, and any waiting is
charged to the operation that waited.

Ordering is fully deterministic.  Events are keyed by ``(time, sequence)``
and message matching runs only after every event at the current instant
has been processed, so ties between simultaneous senders resolve by
instance order rather than by incidental event order.
"""

from __future__ import annotations

import heapq
import itertools
import types
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .behaviors import resolve_behavior
from .costs import CommOpSpec, ComputeOpSpec, CostRegistry, power_at
from .errors import (DeadlockError, InfeasibleMappingError, ParameterError, RoutingError,
                     TraceError)
from .model import Application, Capabilities, Mapping, SystemModel, shortest_route, validate_mapping

ANY = None  # wildcard source for recv

_MISSING = object()


# -- operations yielded by behavior programs ------------------------------------


@dataclass(frozen=True)
class Compute:
    spec: ComputeOpSpec


@dataclass(frozen=True)
class Send:
    peer: str
    tag: int
    size: float
    payload: Any = None
    blocking: bool = True


@dataclass(frozen=True)
class Recv:
    peer: str | None
    tag: int
    blocking: bool = True


@dataclass(frozen=True)
class Fetch:
    """One-sided transfer of ``size`` bytes from a device with no process on it."""

    device: str
    size: float
    blocking: bool = True


@dataclass(frozen=True)
class Wait:
    handles: tuple


@dataclass(frozen=True)
class Message:
    source: str
    tag: int
    size: float
    payload: Any = None


class Handle:
    """Completion token of a non-blocking operation."""

    __slots__ = ("owner", "label", "done", "result", "end")

    def __init__(self, owner, label):
        self.owner = owner
        self.label = label
        self.done = False
        self.result = None
        self.end = None

    def __repr__(self):
        state = f"done@{self.end}" if self.done else "pending"
        return f"<Handle {self.label} {state}>"


# -- process API ---------------------------------------------------------------


class ProcessContext:
    """What a behavior program sees of the world.

    Operations are built here and must be yielded to take effect::

        msg = yield ctx.recv("master:0", tag=1)
        yield ctx.compute(msg.size)
    """

    def __init__(self, address, process, rank, device, params, args, instances):
        self.address = address
        self.process = process
        self.rank = rank
        self.device = device
        self._params = params
        self._args = args
        self._instances = instances

    # parameters
    def param(self, name, default=_MISSING):
        if name in self._params:
            return self._params[name]
        if name in self._args:
            return self._args[name]
        if default is _MISSING:
            raise ParameterError(f"{self.address}: missing parameter {name!r}", name)
        return default

    @property
    def self_rank(self):
        return self.rank

    def peers(self, process: str) -> list[str]:
        return list(self._instances.get(process, ()))

    def count(self, process: str) -> int:
        return len(self._instances.get(process, ()))

    # operations
    def compute(self, data_size, core_demand=1, kind="compute"):
        return Compute(ComputeOpSpec(data_size, core_demand, kind))

    def send(self, peer, tag, size, payload=None):
        return Send(peer, tag, size, payload)

    def isend(self, peer, tag, size, payload=None):
        return Send(peer, tag, size, payload, blocking=False)

    def recv(self, peer, tag):
        return Recv(peer, tag)

    def irecv(self, peer, tag):
        return Recv(peer, tag, blocking=False)

    def fetch(self, device, size):
        return Fetch(device, size)

    def ifetch(self, device, size):
        return Fetch(device, size, blocking=False)

    def wait(self, *handles):
        if len(handles) == 1 and isinstance(handles[0], (list, tuple)):
            handles = tuple(handles[0])
        return Wait(tuple(handles))


# -- inputs and outputs ----------------------------------------------------------


@dataclass(frozen=True)
class SimulationInstance:
    system: SystemModel
    app: Application
    caps: Capabilities
    mapping: Mapping
    params: dict = field(default_factory=dict)
    cost_models: dict = field(default_factory=dict)
    idle_scope: str = "allocated"


@dataclass(frozen=True)
class TraceRecord:
    time: float
    device: str
    delta: int
    label: str


@dataclass(frozen=True)
class OpRecord:
    """A blocking operation (or wait) of one instance and its wall interval."""

    instance: str
    label: str
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class SimulationResult:
    makespan: float
    avg_power: float
    max_power: float
    per_device_energy: dict[str, float]
    per_process_time: dict[str, float]
    trace: list[TraceRecord] | None = None
    operations: list[OpRecord] | None = None
    idle_scope: str = "allocated"

    @property
    def total_energy(self) -> float:
        return sum(self.per_device_energy.values())

    def to_dict(self, params=None, mapping: Mapping | None = None) -> dict:
        out = {
            "makespan_s": self.makespan,
            "avg_power_w": self.avg_power,
            "max_power_w": self.max_power,
            "per_device_energy_j": dict(self.per_device_energy),
            "per_process_time_s": dict(self.per_process_time),
            "idle_scope": self.idle_scope,
            "params": dict(params or {}),
            "mapping": mapping.to_nested() if mapping is not None else {},
        }
        return out


# -- matching ---------------------------------------------------------------------


@dataclass
class _CommRequest:
    owner: "_Instance"
    peer: str | None
    tag: int
    size: float
    payload: Any
    post_time: float
    seq: int
    handle: Handle

    @property
    def address(self):
        return self.owner.address


def match_comm(sends: Sequence[_CommRequest], recvs: Sequence[_CommRequest]):
    """First matchable (send, recv) pair, or None.

    Receives are served in posting order.  A receive matches a send when the
    receiver address, the tag and (unless the receive is a wildcard) the
    sender agree.  Among candidate sends the earliest posted wins, then the
    lower-ordered sender, then the earlier sequence number, which keeps each
    (sender, receiver, tag) channel FIFO.
    """
    for r in sorted(recvs, key=lambda q: (q.post_time, q.seq)):
        best = None
        for s in sends:
            if s.peer != r.owner.address or s.tag != r.tag:
                continue
            if r.peer is not ANY and s.owner.address != r.peer:
                continue
            key = (s.post_time, s.owner.order, s.seq)
            if best is None or key < best[0]:
                best = (key, s)
        if best is not None:
            return best[1], r
    return None


# -- engine -------------------------------------------------------------------------


class _Instance:
    __slots__ = ("address", "process", "rank", "order", "device", "gen", "waiting",
                 "wait_label", "wait_start", "finish")

    def __init__(self, address, process, rank, order, device):
        self.address = address
        self.process = process
        self.rank = rank
        self.order = order
        self.device = device
        self.gen = None
        self.waiting: tuple = ()
        self.wait_label = None
        self.wait_start = 0.0
        self.finish = None


class _Simulator:
    def __init__(self, instance: SimulationInstance, costs: CostRegistry, keep_trace: bool):
        self.inst = instance
        self.system = instance.system
        self.costs = costs
        self.keep_trace = keep_trace
        self.now = 0.0
        self._seq = itertools.count()
        self.heap: list = []
        self.sends: list[_CommRequest] = []
        self.recvs: list[_CommRequest] = []
        self.trace: list[TraceRecord] = []
        self.ops: list[OpRecord] = []
        self.routes: dict = {}

        addresses: dict[str, list[str]] = {}
        self.instances: list[_Instance] = []
        for proc in instance.app.processes:
            rank = 0
            for dev in instance.system.device_ids:
                for _ in range(instance.mapping.get(dev, proc.name)):
                    addr = f"{proc.name}:{rank}"
                    self.instances.append(
                        _Instance(addr, proc.name, rank, len(self.instances), dev))
                    addresses.setdefault(proc.name, []).append(addr)
                    rank += 1
        self.by_address = {i.address: i for i in self.instances}
        for i in self.instances:
            proc = instance.app.process(i.process)
            program = resolve_behavior(proc)
            ctx = ProcessContext(i.address, i.process, i.rank, instance.system.device(i.device),
                                 instance.params, proc.behavior_args, addresses)
            i.gen = program(ctx)

    # event plumbing
    def _push(self, time, kind, *data):
        heapq.heappush(self.heap, (time, next(self._seq), kind, data))

    def route(self, a: str, b: str):
        if a == b:
            return []
        key = (a, b)
        if key not in self.routes:
            ids = shortest_route(self.system, a, b)
            self.routes[key] = [self.system.link_map[x] for x in ids]
        return self.routes[key]

    def _complete(self, handle: Handle, result=None):
        handle.done = True
        handle.result = result
        handle.end = self.now
        owner = handle.owner
        if handle in owner.waiting and all(h.done for h in owner.waiting):
            self._push(self.now, "resume", owner)

    def _block(self, inst: _Instance, handles: tuple, label: str):
        inst.waiting = handles
        inst.wait_label = label
        inst.wait_start = self.now

    # driving generators
    def _advance(self, inst: _Instance, value):
        gen = inst.gen
        while True:
            if not isinstance(gen, types.GeneratorType):
                inst.finish = self.now
                return
            try:
                op = gen.send(value)
            except StopIteration:
                inst.finish = self.now
                return
            value = self._dispatch(inst, op)
            if inst.waiting:
                return

    def _dispatch(self, inst: _Instance, op):
        now = self.now
        if isinstance(op, Compute):
            device = self.system.device(inst.device)
            duration = self.costs.compute_time(inst.process, op.spec, device)
            label = f"{inst.address} {op.spec.kind}"
            h = Handle(inst, label)
            self.trace.append(TraceRecord(now, inst.device, op.spec.core_demand, label))
            self._push(now + duration, "compute_done", h, inst.device, op.spec.core_demand)
            self._block(inst, (h,), f"compute:{op.spec.kind}")
            return None
        if isinstance(op, (Send, Recv)):
            peer = op.peer
            if peer is not ANY and peer not in self.by_address:
                raise ParameterError(f"{inst.address}: unknown peer {peer!r}", "peer")
            if isinstance(op, Send):
                h = Handle(inst, f"{inst.address} send->{peer}#{op.tag}")
                self.sends.append(_CommRequest(inst, peer, op.tag, op.size, op.payload,
                                               now, next(self._seq), h))
                label = f"send:{op.tag}"
            else:
                h = Handle(inst, f"{inst.address} recv<-{peer}#{op.tag}")
                self.recvs.append(_CommRequest(inst, peer, op.tag, 0.0, None,
                                               now, next(self._seq), h))
                label = f"recv:{op.tag}"
            if op.blocking:
                self._block(inst, (h,), label)
                return None
            return h
        if isinstance(op, Fetch):
            self.system.device(op.device)
            spec = CommOpSpec(op.device, 0, op.size, "receive")
            duration = self.costs.comm_time(spec, self.route(inst.device, op.device))
            h = Handle(inst, f"{inst.address} fetch<-{op.device}")
            self._push(now + duration, "done", h, None)
            if op.blocking:
                self._block(inst, (h,), "fetch")
                return None
            return h
        if isinstance(op, Wait):
            if all(h.done for h in op.handles):
                return [h.result for h in op.handles]
            self._block(inst, op.handles, "wait")
            return None
        raise TypeError(f"{inst.address}: behavior yielded unsupported operation {op!r}")

    def _resume(self, inst: _Instance):
        handles = inst.waiting
        if not handles or not all(h.done for h in handles):
            return
        self.ops.append(OpRecord(inst.address, inst.wait_label, inst.wait_start, self.now))
        inst.waiting = ()
        value = handles[0].result if len(handles) == 1 and inst.wait_label != "wait" \
            else [h.result for h in handles]
        self._advance(inst, value)

    def _handle_event(self, kind, data):
        if kind == "start":
            (inst,) = data
            self._advance(inst, None)
        elif kind == "resume":
            self._resume(data[0])
        elif kind == "compute_done":
            h, device, demand = data
            self.trace.append(TraceRecord(self.now, device, -demand, h.label))
            self._complete(h)
        elif kind == "done":
            h, result = data
            self._complete(h, result)
        elif kind == "comm_done":
            s, r = data
            self._complete(s.handle, None)
            self._complete(r.handle, Message(s.owner.address, s.tag, s.size, s.payload))

    def _match_all(self) -> bool:
        matched = False
        while True:
            pair = match_comm(self.sends, self.recvs)
            if pair is None:
                return matched
            s, r = pair
            self.sends.remove(s)
            self.recvs.remove(r)
            spec = CommOpSpec(r.owner.address, s.tag, s.size, "send")
            duration = self.costs.comm_time(spec, self.route(s.owner.device, r.owner.device))
            self._push(self.now + duration, "comm_done", s, r)
            matched = True

    def run(self):
        for inst in self.instances:
            self._push(0.0, "start", inst)
        heap = self.heap
        while True:
            if heap and heap[0][0] == self.now:
                _t, _s, kind, data = heapq.heappop(heap)
                self._handle_event(kind, data)
                continue
            if self._match_all():
                continue
            if not heap:
                break
            self.now = heap[0][0]
        blocked = [i.address for i in self.instances if i.finish is None]
        dangling = [s.owner.address for s in self.sends] + [r.owner.address for r in self.recvs]
        if blocked or dangling:
            raise DeadlockError(set(blocked) | set(dangling))


def allocated_scope(system: SystemModel, mapping: Mapping, idle_scope: str) -> list[str]:
    if idle_scope == "all":
        return system.device_ids
    if idle_scope == "allocated":
        alloc = set(mapping.allocated_devices)
        return [d for d in system.device_ids if d in alloc]
    raise ParameterError(f"idle scope must be 'all' or 'allocated', got {idle_scope!r}",
                         "idle_scope")


def integrate_energy(trace: Iterable[TraceRecord], system: SystemModel, scope: Sequence[str],
                     makespan: float):
    """Integrate device power over a trace of active-demand changes.

    Returns ``(per_device_energy, avg_power, max_power)`` over the devices in
    ``scope``.  Power is piecewise constant between trace records; max power
    considers only segments of positive length.
    """
    devices = [system.device(d) for d in scope]
    active = {d.id: 0 for d in devices}
    other_active: dict[str, int] = {}
    energy = {d.id: 0.0 for d in devices}
    t_prev = 0.0
    max_power = None

    def segment(t_end):
        nonlocal max_power
        length = t_end - t_prev
        if length <= 0:
            return
        total = 0.0
        for d in devices:
            p = power_at(d, active[d.id])
            energy[d.id] += p * length
            total += p
        max_power = total if max_power is None else max(max_power, total)

    last_time = 0.0
    for rec in trace:
        if rec.time < last_time:
            raise TraceError(f"trace times decrease at {rec.time}")
        last_time = rec.time
        if rec.time > t_prev:
            segment(min(rec.time, makespan))
            t_prev = rec.time
        counter = active if rec.device in active else other_active
        counter[rec.device] = counter.get(rec.device, 0) + rec.delta
        if counter[rec.device] < 0:
            raise TraceError(f"negative active demand on {rec.device} at t={rec.time}")
    if makespan > t_prev:
        segment(makespan)
    idle = sum(d.p_idle for d in devices)
    if makespan > 0:
        avg = sum(energy.values()) / makespan
    else:
        avg = idle
    if max_power is None:
        max_power = idle
    return energy, avg, max_power


def simulate(instance: SimulationInstance, cost_registry: CostRegistry | None = None,
             keep_trace: bool = True) -> SimulationResult:
    """Run one simulation instance to completion.

    Raises InfeasibleMappingError for a mapping outside the feasible set,
    DeadlockError when instances block forever and RoutingError when two
    communicating devices are not connected.
    """
    violations = validate_mapping(instance.system, instance.app, instance.caps, instance.mapping)
    if violations:
        raise InfeasibleMappingError(
            "infeasible mapping: " + "; ".join(str(v) for v in violations), violations)
    costs = cost_registry or CostRegistry.from_params(instance.cost_models)
    sim = _Simulator(instance, costs, keep_trace)
    sim.run()
    per_proc = {i.address: i.finish for i in sim.instances}
    makespan = max(per_proc.values(), default=0.0)
    scope = allocated_scope(instance.system, instance.mapping, instance.idle_scope)
    energy, avg, peak = integrate_energy(sim.trace, instance.system, scope, makespan)
    return SimulationResult(
        makespan=makespan,
        avg_power=avg,
        max_power=peak,
        per_device_energy=energy,
        per_process_time=per_proc,
        trace=sim.trace if keep_trace else None,
        operations=sim.ops,
        idle_scope=instance.idle_scope,
    )


__all__ = [
    "ANY", "Compute", "Send", "Recv", "Fetch", "Wait", "Message", "Handle", "ProcessContext",
    "SimulationInstance", "SimulationResult", "TraceRecord", "OpRecord", "match_comm",
    "integrate_energy", "simulate", "allocated_scope", "RoutingError",
]
