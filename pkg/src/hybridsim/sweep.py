"""Optimizer suites: expand parameter and mapping spaces, run them, emit CSV."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping as MappingABC, Sequence

from .engine import SimulationInstance, SimulationResult, simulate
from .errors import ExpansionError, HybridSimError, ParseError
from .mapping import enumerate_mappings, round_robin_map, select_and_map_under_limit
from .model import Application, Mapping, ParamSpace, load_application, load_system
from .pareto import ParetoPoint, pareto_mask

INSTANCES_PREFIX = "instances."


# -- mapping sources -------------------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    """Use the base instance's mapping unchanged."""


@dataclass(frozen=True)
class RoundRobin:
    """Recompute a round-robin mapping for every parameter vector."""


@dataclass(frozen=True)
class Enumerate:
    bound: int


@dataclass(frozen=True)
class PowerLimit:
    """Greedy device selection under ``watts``.

    A ``power_limit_w`` parameter, when swept, overrides ``watts``.
    """

    watts: float
    device_power: dict = field(default_factory=dict)
    worker: str = "slave"


MappingSource = Fixed | RoundRobin | Enumerate | PowerLimit


def parse_mapping_source(spec) -> MappingSource:
    if spec in (None, "fixed"):
        return Fixed()
    if spec == "round_robin":
        return RoundRobin()
    if isinstance(spec, MappingABC) and "enumerate" in spec:
        bound = spec["enumerate"]
        if not isinstance(bound, int) or bound < 1:
            raise ExpansionError(f"enumerate bound must be a positive integer, got {bound!r}")
        return Enumerate(bound)
    if isinstance(spec, MappingABC) and "power_limit" in spec:
        return PowerLimit(float(spec["power_limit"]),
                          {str(k): float(v) for k, v in spec.get("device_power", {}).items()},
                          str(spec.get("worker", "slave")))
    raise ExpansionError(f"unknown mapping source {spec!r}")


# -- suites ----------------------------------------------------------------------------------


def apply_instance_params(app: Application, params: MappingABC[str, Any]) -> Application:
    """Pin process instance counts given as ``instances.<process>`` parameters."""
    bounds = {}
    for key, value in params.items():
        if key.startswith(INSTANCES_PREFIX):
            n = int(value)
            bounds[key[len(INSTANCES_PREFIX):]] = (n, n)
    return app.with_bounds(bounds) if bounds else app


@dataclass(frozen=True)
class Suite:
    base: SimulationInstance
    param_space: ParamSpace = field(default_factory=ParamSpace)
    mapping_source: MappingSource = field(default_factory=Fixed)


def _mappings_for(inst: SimulationInstance, source: MappingSource) -> list[Mapping]:
    if isinstance(source, Fixed):
        return [inst.mapping]
    if isinstance(source, RoundRobin):
        return [round_robin_map(inst.system, inst.app, inst.caps)]
    if isinstance(source, Enumerate):
        return enumerate_mappings(inst.system, inst.app, inst.caps, source.bound)
    limit = float(inst.params.get("power_limit_w", source.watts))
    return [select_and_map_under_limit(inst.system, inst.app, inst.caps, source.device_power,
                                       limit, source.worker)]


def expand_suite(suite: Suite) -> list[SimulationInstance]:
    """One instance per parameter vector and mapping, parameters outermost."""
    out = []
    for vector in suite.param_space:
        params = {**suite.base.params, **vector}
        inst = replace(suite.base, app=apply_instance_params(suite.base.app, params),
                       params=params)
        for mapping in _mappings_for(inst, suite.mapping_source):
            out.append(replace(inst, mapping=mapping))
    return out


# -- running ------------------------------------------------------------------------------------


def _run_one(inst: SimulationInstance):
    try:
        return simulate(inst, keep_trace=False)
    except HybridSimError as exc:
        return exc


def run_suite(instances: Sequence[SimulationInstance], workers: int = 1
              ) -> list[tuple[SimulationInstance, SimulationResult | HybridSimError]]:
    """Simulate every instance; a failing instance leaves its error in its slot.

    Results come back in input order for any ``workers``.
    """
    if int(workers) != workers or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")
    instances = list(instances)
    if workers == 1 or len(instances) < 2:
        results = [_run_one(i) for i in instances]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(instances))) as pool:
            results = list(pool.map(_run_one, instances))
    return list(zip(instances, results))


def failures(outcomes) -> list[tuple[int, HybridSimError]]:
    return [(i, r) for i, (_, r) in enumerate(outcomes) if isinstance(r, Exception)]


# -- files -------------------------------------------------------------------------------------------


def _load_ref(ref, base_dir: Path):
    if isinstance(ref, str):
        path = base_dir / ref
        try:
            return json.loads(path.read_text())
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: malformed JSON: {exc}") from exc
    return ref


def load_instance(doc, base_dir: str | os.PathLike = ".") -> SimulationInstance:
    """Build an instance from ``{"system", "application", "mapping", "params", "idle_scope"}``.

    ``system`` and ``application`` are inline objects or paths relative to
    ``base_dir``.  ``mapping`` is a nested ``{device: {process: count}}``
    table, a path to one, or ``"round_robin"``.
    """
    base_dir = Path(base_dir)
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed instance JSON: {exc}") from exc
    if not isinstance(doc, MappingABC):
        raise ParseError("instance must be a JSON object")
    for key in ("system", "application"):
        if key not in doc:
            raise ParseError(f"instance: missing field {key!r}")
    system = load_system(_load_ref(doc["system"], base_dir))
    appdoc = load_application(_load_ref(doc["application"], base_dir))
    params = dict(doc.get("params", {}))
    app = apply_instance_params(appdoc.app, params)
    mapping_ref = doc.get("mapping", "round_robin")
    if mapping_ref == "round_robin":
        mapping = round_robin_map(system, app, appdoc.caps)
    else:
        nested = _load_ref(mapping_ref, base_dir)
        if not isinstance(nested, MappingABC):
            raise ParseError("mapping must be an object {device: {process: count}}")
        mapping = Mapping.from_nested(nested)
    return SimulationInstance(system, app, appdoc.caps, mapping, params, appdoc.cost_models,
                              doc.get("idle_scope", "allocated"))


def load_suite(doc, base_dir: str | os.PathLike = ".", idle_scope: str | None = None) -> Suite:
    """Parse ``{"base": <instance>, "sweep": {...}, "mappings": ...}``."""
    base_dir = Path(base_dir)
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed suite JSON: {exc}") from exc
    if not isinstance(doc, MappingABC) or "base" not in doc:
        raise ParseError("suite: missing field 'base'")
    base = load_instance(_load_ref(doc["base"], base_dir), base_dir)
    if idle_scope is not None:
        base = replace(base, idle_scope=idle_scope)
    return Suite(base, ParamSpace.from_dict(doc.get("sweep", {})),
                 parse_mapping_source(doc.get("mappings", "fixed")))


def suite_csv(outcomes, param_names: Iterable[str]) -> str:
    """CSV text with one row per instance, in the order given.

    Failed instances have empty objective cells and their error message in
    the ``error`` column; they never count as Pareto-optimal.
    """
    names = list(param_names)
    ok = [(i, r) for i, (_, r) in enumerate(outcomes) if isinstance(r, SimulationResult)]
    mask = pareto_mask([ParetoPoint((r.makespan, r.avg_power)) for _, r in ok])
    on_front = {i for (i, _), keep in zip(ok, mask) if keep}

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["makespan_s", "avg_power_w", "pareto", *names, "mapping_id", "error"])
    for i, (inst, res) in enumerate(outcomes):
        pvals = [inst.params.get(n, "") for n in names]
        if isinstance(res, SimulationResult):
            row = [repr(res.makespan), repr(res.avg_power), "true" if i in on_front else "false",
                   *pvals, inst.mapping.label(), ""]
        else:
            row = ["", "", "false", *pvals, inst.mapping.label(),
                   f"{type(res).__name__}: {res}"]
        writer.writerow(row)
    return buf.getvalue()
