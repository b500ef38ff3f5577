"""Registry of process behavior programs.

A behavior is a generator function taking a :class:`~hybridsim.engine.ProcessContext`
and yielding operations.  Families with several cooperating roles (master and
slave) register one function per role; a process implementation picks its role
through ``args["role"]`` or, by default, its own process name.

Shipped families:

``script``
    Replays a literal operation list from ``args["ops"]``; any role.
``task_farm`` / ``task_farm_prefetch``
    Greedy dynamic master/slave farm over ``base * v_dpm`` equal packages.
    The prefetch variant overlaps the remote fetch of the next package with
    the computation of the current one.
``dnn_training``
    Synchronous data-parallel training: per iteration the master ships the
    model to every slave, each slave trains on one archive, and the master
    collects all models back.
``vector_similarity``
    Master/slave farm over point chunks; the chunk size trades message
    startups against result volume.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from .errors import ParameterError, ResolutionError

_REGISTRY: dict[tuple[str, str], Callable] = {}

TAG_TASK = 1
TAG_RESULT = 2
TAG_MODEL = 3
TAG_MODEL_BACK = 4


def behavior(name: str, role: str = "*"):
    def register(fn):
        _REGISTRY[(name, role)] = fn
        return fn
    return register


def resolve_behavior(proc) -> Callable:
    fn = _REGISTRY.get((proc.behavior, proc.role)) or _REGISTRY.get((proc.behavior, "*"))
    if fn is None:
        roles = sorted(r for (n, r) in _REGISTRY if n == proc.behavior)
        hint = f" (known roles: {', '.join(roles)})" if roles else ""
        raise ResolutionError(
            f"processes[{proc.name}]: no behavior {proc.behavior!r} for role {proc.role!r}{hint}",
            f"processes[{proc.name}].behavior")
    return fn


def registered_behaviors() -> list[tuple[str, str]]:
    return sorted(_REGISTRY)


# -- script -------------------------------------------------------------------


@behavior("script")
def script(ctx):
    ops = ctx.param("ops", [])
    for _ in range(int(ctx.param("repeat", 1))):
        for op in ops:
            kind, *rest = op
            if kind == "compute":
                size, *more = rest
                demand = more[0] if more else 1
                label = more[1] if len(more) > 1 else "compute"
                yield ctx.compute(size, demand, label)
            elif kind == "send":
                peer, tag, size = rest
                yield ctx.send(peer, tag, size)
            elif kind == "recv":
                peer, tag = rest
                yield ctx.recv(peer, tag)
            elif kind == "fetch":
                device, size = rest
                yield ctx.fetch(device, size)
            else:
                raise ParameterError(f"{ctx.address}: unknown script op {kind!r}", "ops")


# -- task farming ------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    index: int
    work: float
    in_size: float
    out_size: float
    fetch_size: float = 0.0
    last: bool = False


def _farm_master(ctx, packages, lookahead, worker):
    slaves = ctx.peers(worker)
    if not slaves:
        raise ParameterError(f"{ctx.address}: task farm needs at least one {worker!r} instance",
                             worker)
    queue = deque(packages)
    closed = set()
    pending = []

    def dispatch(slave):
        if queue:
            task = queue.popleft()
            if not queue:
                task = Task(task.index, task.work, task.in_size, task.out_size,
                            task.fetch_size, last=True)
                closed.add(slave)
            return ctx.isend(slave, TAG_TASK, task.in_size, task)
        closed.add(slave)
        return ctx.isend(slave, TAG_TASK, 0.0, None)

    for _ in range(1 + lookahead):
        for s in slaves:
            if s not in closed:
                pending.append((yield dispatch(s)))
    for _ in range(len(packages)):
        msg = yield ctx.recv(None, TAG_RESULT)
        if msg.source not in closed:
            pending.append((yield dispatch(msg.source)))
    if pending:
        yield ctx.wait(pending)


def _farm_slave(ctx, master, remote, kind):
    while True:
        msg = yield ctx.recv(master, TAG_TASK)
        task = msg.payload
        if task is None:
            return
        if task.fetch_size:
            yield ctx.fetch(remote, task.fetch_size)
        yield ctx.compute(task.work, kind=kind)
        yield ctx.send(master, TAG_RESULT, task.out_size, task.index)
        if task.last:
            return


def _farm_slave_prefetch(ctx, master, remote, kind):
    msg = yield ctx.recv(master, TAG_TASK)
    cur = msg.payload
    if cur is None:
        return
    fetching = (yield ctx.ifetch(remote, cur.fetch_size)) if cur.fetch_size else None
    while True:
        if fetching is not None:
            yield ctx.wait(fetching)
        nxt = None if cur.last else (yield ctx.recv(master, TAG_TASK)).payload
        fetching = None
        if nxt is not None and nxt.fetch_size:
            fetching = yield ctx.ifetch(remote, nxt.fetch_size)
        yield ctx.compute(cur.work, kind=kind)
        yield ctx.send(master, TAG_RESULT, cur.out_size, cur.index)
        if nxt is None:
            return
        cur = nxt


def farm_packages(ctx) -> list[Task]:
    """Equal packages of a task farm: ``base * v_dpm`` of them.

    ``base`` is the ``package_base`` parameter when given, otherwise the number
    of worker instances.
    """
    worker = ctx.param("worker", "slave")
    v_dpm = int(ctx.param("v_dpm"))
    if v_dpm < 1:
        raise ParameterError(f"v_dpm must be a positive integer, got {v_dpm}", "v_dpm")
    base = int(ctx.param("package_base", 0)) or ctx.count(worker)
    if base < 1:
        raise ParameterError("task farm needs at least one worker instance", worker)
    n = base * v_dpm
    work = float(ctx.param("total_work")) / n
    in_size = float(ctx.param("package_size_b", 0.0))
    out_size = float(ctx.param("result_size_b", 0.0))
    fetch = float(ctx.param("remote_fetch_size_b", 0.0))
    return [Task(i, work, in_size, out_size, fetch) for i in range(n)]


def _worker_args(ctx):
    master = ctx.peers(ctx.param("master", "master"))
    if len(master) != 1:
        raise ParameterError(f"{ctx.address}: expected exactly one master instance", "master")
    remote = ctx.param("remote_device", None)
    if float(ctx.param("remote_fetch_size_b", 0.0)) > 0 and remote is None:
        raise ParameterError("remote_fetch_size_b needs remote_device", "remote_device")
    return master[0], remote, ctx.param("kind", "compute")


@behavior("task_farm", "master")
def task_farm_master(ctx):
    yield from _farm_master(ctx, farm_packages(ctx), 0, ctx.param("worker", "slave"))


@behavior("task_farm", "slave")
def task_farm_slave(ctx):
    yield from _farm_slave(ctx, *_worker_args(ctx))


@behavior("task_farm_prefetch", "master")
def task_farm_prefetch_master(ctx):
    yield from _farm_master(ctx, farm_packages(ctx), 1, ctx.param("worker", "slave"))


@behavior("task_farm_prefetch", "slave")
def task_farm_prefetch_slave(ctx):
    yield from _farm_slave_prefetch(ctx, *_worker_args(ctx))


# -- vector similarity ------------------------------------------------------------


def similarity_packages(ctx) -> list[Task]:
    points = int(ctx.param("points"))
    dims = int(ctx.param("dims"))
    chunk = int(ctx.param("chunk_points"))
    value_b = float(ctx.param("bytes_per_value", 8))
    if chunk < 1:
        raise ParameterError("chunk_points must be a positive integer", "chunk_points")
    if chunk > points:
        raise ParameterError("chunk_points must not exceed points", "chunk_points")
    tasks = []
    for i, start in enumerate(range(0, points, chunk)):
        c = min(chunk, points - start)
        size = c * dims * value_b
        tasks.append(Task(i, size, size, c * c * value_b))
    return tasks


@behavior("vector_similarity", "master")
def vector_similarity_master(ctx):
    yield from _farm_master(ctx, similarity_packages(ctx), 0, ctx.param("worker", "slave"))


@behavior("vector_similarity", "slave")
def vector_similarity_slave(ctx):
    master, _remote, kind = _worker_args(ctx)
    yield from _farm_slave(ctx, master, None, kind)


# -- deep neural network training ---------------------------------------------------


def dnn_schedule(k: int, archives, iterations=None, epoch_archives=None) -> list[list[float]]:
    """Archive sizes trained per iteration, one entry per participating slave.

    Archives are consumed round-robin from the list, ``k`` per iteration.
    With ``epoch_archives`` the run stops after that many archives, so the
    final iteration may involve fewer than ``k`` slaves.
    """
    archives = list(archives)
    if not archives:
        raise ParameterError("dnn_training needs a non-empty archive list", "archives_b")
    if k < 1:
        raise ParameterError("dnn_training needs at least one slave", "slave")
    if (iterations is None) == (epoch_archives is None):
        raise ParameterError("give exactly one of iterations / epoch_archives", "iterations")
    total = int(epoch_archives) if epoch_archives is not None else int(iterations) * k
    if total < 1:
        raise ParameterError("dnn_training needs a positive amount of work", "iterations")
    out = []
    for first in range(0, total, k):
        out.append([archives[j % len(archives)] for j in range(first, min(first + k, total))])
    return out


def _dnn_plan(ctx):
    slaves = ctx.peers(ctx.param("worker", "slave"))
    plan = dnn_schedule(len(slaves), ctx.param("archives_b"), ctx.param("iterations", None),
                        ctx.param("epoch_archives", None))
    return slaves, plan, float(ctx.param("model_size_b"))


@behavior("dnn_training", "master")
def dnn_training_master(ctx):
    slaves, plan, model = _dnn_plan(ctx)
    average = float(ctx.param("average_work", 0.0))
    for group in plan:
        handles = []
        for slave, archive in zip(slaves, group):
            handles.append((yield ctx.isend(slave, TAG_MODEL, model, archive)))
        for slave in slaves[:len(group)]:
            handles.append((yield ctx.irecv(slave, TAG_MODEL_BACK)))
        yield ctx.wait(handles)
        if average:
            yield ctx.compute(average * len(group), kind="average")


@behavior("dnn_training", "slave")
def dnn_training_slave(ctx):
    slaves, plan, model = _dnn_plan(ctx)
    master = ctx.peers(ctx.param("master", "master"))[0]
    for group in plan:
        if ctx.rank >= len(group):
            continue
        msg = yield ctx.recv(master, TAG_MODEL)
        yield ctx.compute(msg.payload, kind="train")
        yield ctx.send(master, TAG_MODEL_BACK, model)

