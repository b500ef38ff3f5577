"""Data model: systems, applications, capabilities, mappings, parameter spaces.

All types are immutable once built, so a loaded model can be shared by any
number of simulation workers.  Devices are always iterated in sorted-id
order; that order fixes instance ranks, round-robin placement and every
other deterministic tie-break in the package.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping as MappingABC

from .errors import ExpansionError, ParseError, ResolutionError, RoutingError, ValidationError
from .behaviors import resolve_behavior

UNBOUNDED = math.inf


@dataclass(frozen=True)
class Device:
    id: str
    kind: str
    performance: float
    ncores: int
    p_idle: float
    p_peak: float

    def __post_init__(self):
        where = f"devices[{self.id}]"
        if not self.performance > 0:
            raise ValidationError(f"{where}: performance must be > 0", f"{where}.performance")
        if int(self.ncores) != self.ncores or self.ncores < 1:
            raise ValidationError(f"{where}: ncores must be an integer >= 1", f"{where}.ncores")
        if self.p_idle < 0:
            raise ValidationError(f"{where}: p_idle_w must be >= 0", f"{where}.p_idle_w")
        if self.p_idle > self.p_peak:
            raise ValidationError(f"{where}: p_idle_w exceeds p_peak_w", f"{where}.p_idle_w")


@dataclass(frozen=True)
class NetworkLink:
    id: str
    a: str
    b: str
    t_startup: float
    bandwidth: float

    def __post_init__(self):
        where = f"links[{self.id}]"
        if self.t_startup < 0:
            raise ValidationError(f"{where}: t_startup_s must be >= 0", f"{where}.t_startup_s")
        if not self.bandwidth > 0:
            raise ValidationError(f"{where}: bandwidth_bps must be > 0", f"{where}.bandwidth_bps")
        if self.a == self.b:
            raise ValidationError(f"{where}: endpoints must differ", f"{where}.b")

    def other(self, device_id: str) -> str:
        return self.b if device_id == self.a else self.a


@dataclass(frozen=True)
class SystemModel:
    devices: tuple[Device, ...]
    links: tuple[NetworkLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(sorted(self.devices, key=lambda d: d.id)))
        object.__setattr__(self, "links", tuple(sorted(self.links, key=lambda l: l.id)))
        seen = set()
        for d in self.devices:
            if d.id in seen:
                raise ValidationError(f"duplicate device id {d.id!r}", f"devices[{d.id}].id")
            seen.add(d.id)
        seen_links = set()
        for l in self.links:
            if l.id in seen_links:
                raise ValidationError(f"duplicate link id {l.id!r}", f"links[{l.id}].id")
            seen_links.add(l.id)
            for end, name in ((l.a, "a"), (l.b, "b")):
                if end not in seen:
                    raise ResolutionError(
                        f"links[{l.id}]: unknown device {end!r}", f"links[{l.id}].{name}")

    @cached_property
    def device_map(self) -> dict[str, Device]:
        return {d.id: d for d in self.devices}

    @cached_property
    def link_map(self) -> dict[str, NetworkLink]:
        return {l.id: l for l in self.links}

    @cached_property
    def _adjacency(self) -> dict[str, list[NetworkLink]]:
        adj: dict[str, list[NetworkLink]] = {d.id: [] for d in self.devices}
        for l in self.links:
            adj[l.a].append(l)
            adj[l.b].append(l)
        return adj

    def device(self, device_id: str) -> Device:
        try:
            return self.device_map[device_id]
        except KeyError:
            raise ResolutionError(f"unknown device {device_id!r}") from None

    @property
    def device_ids(self) -> list[str]:
        return [d.id for d in self.devices]


# -- applications ----------------------------------------------------------


@dataclass(frozen=True)
class ProcessImpl:
    """A process implementation: a named behavior program plus its bounds."""

    name: str
    behavior: str
    behavior_args: MappingABC[str, Any] = field(default_factory=dict)
    r_min: int = 0
    r_max: float = UNBOUNDED

    def __post_init__(self):
        object.__setattr__(self, "behavior_args", dict(self.behavior_args))
        where = f"processes[{self.name}]"
        if self.r_min < 0:
            raise ValidationError(f"{where}: r_min must be >= 0", f"{where}.r_min")
        if self.r_max != UNBOUNDED and int(self.r_max) != self.r_max:
            raise ValidationError(f"{where}: r_max must be an integer or unbounded", f"{where}.r_max")
        if self.r_min > self.r_max:
            raise ValidationError(f"{where}: r_min exceeds r_max", f"{where}.r_min")

    @property
    def role(self) -> str:
        return self.behavior_args.get("role", self.name)

    def __hash__(self):
        return hash((self.name, self.behavior, self.r_min, self.r_max))


@dataclass(frozen=True)
class Application:
    processes: tuple[ProcessImpl, ...]

    def __post_init__(self):
        object.__setattr__(self, "processes", tuple(self.processes))
        names = [p.name for p in self.processes]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValidationError(f"duplicate process name(s) {sorted(dup)}", "processes")

    @cached_property
    def process_map(self) -> dict[str, ProcessImpl]:
        return {p.name: p for p in self.processes}

    @property
    def process_names(self) -> list[str]:
        return [p.name for p in self.processes]

    @property
    def r_min(self) -> dict[str, int]:
        return {p.name: p.r_min for p in self.processes}

    @property
    def r_max(self) -> dict[str, float]:
        return {p.name: p.r_max for p in self.processes}

    def process(self, name: str) -> ProcessImpl:
        try:
            return self.process_map[name]
        except KeyError:
            raise ResolutionError(f"unknown process {name!r}") from None

    def with_bounds(self, bounds: MappingABC[str, tuple[int, float]]) -> "Application":
        """Copy with ``{process: (r_min, r_max)}`` overrides."""
        procs = []
        for p in self.processes:
            if p.name in bounds:
                lo, hi = bounds[p.name]
                p = ProcessImpl(p.name, p.behavior, p.behavior_args, lo, hi)
            procs.append(p)
        return Application(tuple(procs))


class _CountTable:
    """Immutable sparse (device, process) -> non-negative int table."""

    __slots__ = ("_data",)

    def __init__(self, entries: MappingABC[tuple[str, str], int] | Iterable = ()):
        items = entries.items() if isinstance(entries, MappingABC) else entries
        data = {}
        for key, n in items:
            device, process = key
            if int(n) != n or n < 0:
                raise ValidationError(
                    f"count for ({device}, {process}) must be a non-negative integer",
                    f"{device}.{process}")
            if n:
                data[(device, process)] = data.get((device, process), 0) + int(n)
        self._data = dict(sorted(data.items()))

    def get(self, device: str, process: str) -> int:
        return self._data.get((device, process), 0)

    def __getitem__(self, key: tuple[str, str]) -> int:
        return self._data.get(key, 0)

    def items(self):
        return self._data.items()

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __eq__(self, other):
        return type(self) is type(other) and self._data == other._data

    def __hash__(self):
        return hash((type(self).__name__, tuple(self._data.items())))

    def __repr__(self):
        inner = ", ".join(f"{d}/{p}={n}" for (d, p), n in self._data.items())
        return f"{type(self).__name__}({inner})"

    def devices_for(self, process: str) -> list[str]:
        return [d for (d, p) in self._data if p == process]

    def total(self, process: str) -> int:
        return sum(n for (d, p), n in self._data.items() if p == process)

    def to_nested(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for (d, p), n in self._data.items():
            out.setdefault(d, {})[p] = n
        return out

    @classmethod
    def from_nested(cls, nested: MappingABC[str, MappingABC[str, int]]):
        return cls({(d, p): n for d, row in nested.items() for p, n in row.items()})


class Capabilities(_CountTable):
    """Maximum instance count of each process on each device (default 0)."""


class Mapping(_CountTable):
    """Instance count of each process on each device (default 0)."""

    @property
    def allocated_devices(self) -> list[str]:
        return sorted({d for (d, _p) in self._data})

    def label(self) -> str:
        return ";".join(f"{d}:{p}={n}" for (d, p), n in self._data.items())


# -- parameter spaces --------------------------------------------------------


@dataclass(frozen=True)
class IntRange:
    start: int
    stop: int
    step: int = 1

    def values(self) -> list[int]:
        if self.step == 0:
            raise ExpansionError("parameter range step must be non-zero")
        if self.step > 0:
            return list(range(self.start, self.stop + 1, self.step))
        return list(range(self.start, self.stop - 1, self.step))


@dataclass(frozen=True)
class ValueList:
    items: tuple

    def values(self) -> list:
        return list(self.items)


@dataclass(frozen=True)
class ParamSpace:
    domains: tuple[tuple[str, IntRange | ValueList], ...] = ()

    @classmethod
    def from_dict(cls, spec: MappingABC[str, Any]) -> "ParamSpace":
        domains = []
        for name, dom in spec.items():
            if isinstance(dom, MappingABC) and "values" in dom:
                domains.append((name, ValueList(tuple(dom["values"]))))
            elif isinstance(dom, MappingABC) and {"from", "to"} <= set(dom):
                bounds = (dom["from"], dom["to"], dom.get("step", 1))
                if not all(isinstance(b, int) and not isinstance(b, bool) for b in bounds):
                    raise ExpansionError(
                        f"parameter {name!r}: from/to/step must be finite integers, got {bounds}")
                domains.append((name, IntRange(*bounds)))
            else:
                raise ExpansionError(f"parameter {name!r}: domain needs from/to or values")
        return cls(tuple(sorted(domains)))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.domains]

    def __iter__(self) -> Iterator[dict[str, Any]]:
        """ParamVectors in lexicographic order (last name varies fastest)."""
        names = self.names
        for combo in itertools.product(*(d.values() for _, d in self.domains)):
            yield dict(zip(names, combo))

    def __len__(self):
        return math.prod(len(d.values()) for _, d in self.domains)

    def contains(self, vector: MappingABC[str, Any]) -> bool:
        return all(vector.get(n) in d.values() for n, d in self.domains)


# -- loading ------------------------------------------------------------------


def _as_document(document) -> dict:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(document, MappingABC):
        raise ParseError("document must be a JSON object")
    return dict(document)


def _require(obj, key, where):
    try:
        return obj[key]
    except (KeyError, TypeError):
        raise ParseError(f"{where}: missing field {key!r}") from None


def load_system(document) -> SystemModel:
    """Build a SystemModel from a JSON string or an already-parsed dict."""
    doc = _as_document(document)
    devices = []
    for i, d in enumerate(_require(doc, "devices", "system")):
        where = f"devices[{d.get('id', i) if isinstance(d, MappingABC) else i}]"
        devices.append(Device(
            id=str(_require(d, "id", where)),
            kind=str(d.get("kind", "")),
            performance=float(_require(d, "performance", where)),
            ncores=_require(d, "ncores", where),
            p_idle=float(_require(d, "p_idle_w", where)),
            p_peak=float(_require(d, "p_peak_w", where)),
        ))
    links = []
    for i, l in enumerate(doc.get("links", [])):
        where = f"links[{l.get('id', i) if isinstance(l, MappingABC) else i}]"
        links.append(NetworkLink(
            id=str(_require(l, "id", where)),
            a=str(_require(l, "a", where)),
            b=str(_require(l, "b", where)),
            t_startup=float(_require(l, "t_startup_s", where)),
            bandwidth=float(_require(l, "bandwidth_bps", where)),
        ))
    return SystemModel(tuple(devices), tuple(links))


def dump_system(system: SystemModel) -> dict:
    return {
        "devices": [
            {"id": d.id, "kind": d.kind, "performance": d.performance, "ncores": d.ncores,
             "p_idle_w": d.p_idle, "p_peak_w": d.p_peak}
            for d in system.devices
        ],
        "links": [
            {"id": l.id, "a": l.a, "b": l.b, "t_startup_s": l.t_startup,
             "bandwidth_bps": l.bandwidth}
            for l in system.links
        ],
    }


def _parse_rmax(value, where):
    if value is None or value == "unbounded":
        return UNBOUNDED
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ValidationError(f"{where}: r_max must be an integer or 'unbounded'", f"{where}.r_max")
    return int(value)


@dataclass(frozen=True)
class ApplicationDocument:
    """Everything an application JSON document carries."""

    app: Application
    caps: Capabilities
    cost_models: dict = field(default_factory=dict)


def load_application(document) -> ApplicationDocument:
    """Parse processes, capabilities and cost-model overrides.

    Behavior references are checked against the behavior registry here, so
    a typo fails at load time rather than mid-simulation.
    """
    doc = _as_document(document)
    procs = []
    for i, p in enumerate(_require(doc, "processes", "application")):
        where = f"processes[{p.get('name', i) if isinstance(p, MappingABC) else i}]"
        proc = ProcessImpl(
            name=str(_require(p, "name", where)),
            behavior=str(_require(p, "behavior", where)),
            behavior_args=dict(p.get("args", {})),
            r_min=int(p.get("r_min", 0)),
            r_max=_parse_rmax(p.get("r_max"), where),
        )
        resolve_behavior(proc)
        procs.append(proc)
    app = Application(tuple(procs))
    caps = Capabilities({
        (str(_require(c, "device", "capabilities")), str(_require(c, "process", "capabilities"))):
            _require(c, "max", "capabilities")
        for c in doc.get("capabilities", [])
    })
    for _d, proc in caps:
        app.process(proc)
    costs = {}
    for key, val in doc.get("cost_models", {}).items():
        if "." not in key:
            raise ParseError(f"cost_models key {key!r} must be '<process>.<op-kind>'")
        costs[key] = (float(val.get("phi", 1.0)), float(val.get("psi", 0.0)))
    return ApplicationDocument(app, caps, costs)


def dump_application(doc: ApplicationDocument) -> dict:
    return {
        "processes": [
            {"name": p.name, "behavior": p.behavior, "args": dict(p.behavior_args),
             "r_min": p.r_min, "r_max": "unbounded" if p.r_max == UNBOUNDED else int(p.r_max)}
            for p in doc.app.processes
        ],
        "capabilities": [{"device": d, "process": p, "max": n} for (d, p), n in doc.caps.items()],
        "cost_models": {k: {"phi": phi, "psi": psi} for k, (phi, psi) in doc.cost_models.items()},
    }


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One failed clause of the feasible-set definition."""

    clause: str  # "capability" | "r_min" | "r_max"
    device: str | None
    process: str
    bound: float
    value: int

    def __str__(self):
        where = f"({self.device}, {self.process})" if self.device else self.process
        op = ">" if self.clause != "r_min" else "<"
        return f"{self.clause} violated at {where}: {self.value} {op} {self.bound}"


def validate_mapping(system: SystemModel, app: Application, caps: Capabilities,
                     mapping: Mapping) -> list[Violation]:
    """Return every violated feasibility clause; an empty list means feasible."""
    for table in (caps, mapping):
        for d, p in table:
            system.device(d)
            app.process(p)
    out = []
    for (d, p), n in mapping.items():
        k = caps.get(d, p)
        if n > k:
            out.append(Violation("capability", d, p, k, n))
    for proc in app.processes:
        total = mapping.total(proc.name)
        if total < proc.r_min:
            out.append(Violation("r_min", None, proc.name, proc.r_min, total))
        if total > proc.r_max:
            out.append(Violation("r_max", None, proc.name, proc.r_max, total))
    return out


# -- routing ---------------------------------------------------------------------


def shortest_route(system: SystemModel, a: str, b: str) -> list[str]:
    """Link ids of the minimal-hop path from ``a`` to ``b``.

    Ties go to the smaller total startup time, then to the lexicographically
    smaller sequence of link ids.
    """
    system.device(a)
    system.device(b)
    if a == b:
        raise ValueError("shortest_route needs two distinct devices")
    adj = system._adjacency
    # label = (hops, startup_sum, link_ids); lexicographic tuple order is the tie-break
    best = {a: (0, 0.0, ())}
    heap = [(0, 0.0, (), a)]
    while heap:
        hops, ts, path, node = heapq.heappop(heap)
        if best.get(node, None) != (hops, ts, path):
            continue
        if node == b:
            return list(path)
        for link in adj[node]:
            nxt = link.other(node)
            label = (hops + 1, ts + link.t_startup, path + (link.id,))
            if nxt not in best or label < best[nxt]:
                best[nxt] = label
                heapq.heappush(heap, (*label, nxt))
    raise RoutingError(a, b)
