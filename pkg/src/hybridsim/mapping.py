"""Mappers: round-robin placement, power-capped device selection, enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping as MappingABC, Sequence

from .errors import InfeasibleMappingError
from .model import UNBOUNDED, Application, Capabilities, Mapping, SystemModel, validate_mapping


def _check(system, app, caps, mapping):
    violations = validate_mapping(system, app, caps, mapping)
    if violations:
        raise InfeasibleMappingError(
            "mapper produced an infeasible mapping: " + "; ".join(map(str, violations)),
            violations)
    return mapping


def _round_robin_counts(devices, caps, process, target):
    counts = dict.fromkeys(devices, 0)
    placed = 0
    while placed < target:
        progressed = False
        for d in devices:
            if placed == target:
                break
            if counts[d] < caps.get(d, process):
                counts[d] += 1
                placed += 1
                progressed = True
        if not progressed:
            break
    return counts


def _round_robin_entries(system, processes, caps, fill):
    entries = {}
    for proc in processes:
        capable = [d for d in system.device_ids if caps.get(d, proc.name) > 0]
        capacity = sum(caps.get(d, proc.name) for d in capable)
        if capacity < proc.r_min:
            raise InfeasibleMappingError(
                f"process {proc.name!r} needs {proc.r_min} instances but devices allow {capacity}")
        target = min(proc.r_max, capacity) if fill else proc.r_min
        for d, n in _round_robin_counts(capable, caps, proc.name, int(target)).items():
            if n:
                entries[(d, proc.name)] = n
    return entries


def round_robin_map(system: SystemModel, app: Application, caps: Capabilities,
                    fill: bool = True) -> Mapping:
    """Cycle each process's instances over its capable devices in id order.

    Every process gets at least ``r_min`` instances.  With ``fill`` the
    placement continues up to ``r_max`` while capability remains; without it
    exactly ``r_min`` are placed.
    """
    return _check(system, app, caps, Mapping(_round_robin_entries(system, app.processes, caps,
                                                                  fill)))


# -- power-capped selection ---------------------------------------------------------


@dataclass(frozen=True)
class KnapsackItem:
    device: str
    value: float
    weight: float

    def __post_init__(self):
        if self.value < 0 or self.weight < 0:
            raise ValueError(f"knapsack item {self.device}: value and weight must be >= 0")

    @property
    def ratio(self) -> float:
        return float("inf") if self.weight == 0 else self.value / self.weight


@dataclass(frozen=True)
class KnapsackSelection:
    items: tuple[KnapsackItem, ...]
    value: float
    weight: float

    @property
    def devices(self) -> list[str]:
        return [i.device for i in self.items]


def greedy_power_knapsack(items: Sequence[KnapsackItem], capacity: float) -> KnapsackSelection:
    """Greedy 0/1 knapsack by value/weight ratio (approximate, never over capacity).

    Zero-weight items come first; ties break on device id.  Each item is taken
    if it still fits, so a poor-ratio item may be skipped in favor of a later
    smaller one.  If the single most valuable fitting item beats the whole
    greedy fill, that item alone is returned instead, which bounds the loss
    to half the optimum.
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    chosen = []
    weight = 0.0
    value = 0.0
    for item in sorted(items, key=lambda i: (-i.ratio, i.device)):
        if weight + item.weight <= capacity:
            chosen.append(item)
            weight += item.weight
            value += item.value
    fitting = [i for i in items if i.weight <= capacity]
    if fitting:
        best = max(fitting, key=lambda i: (i.value, -i.weight))
        if best.value > value:
            return KnapsackSelection((best,), best.value, best.weight)
    return KnapsackSelection(tuple(chosen), value, weight)


def select_and_map_under_limit(system: SystemModel, app: Application, caps: Capabilities,
                               per_device_max_power: MappingABC[str, float], limit: float,
                               worker: str = "slave") -> Mapping:
    """Pick worker devices under a power limit and build a feasible mapping.

    Non-worker processes get exactly ``r_min`` instances by round-robin; the
    power of the devices they occupy is paid first.  The remaining budget goes
    to a greedy knapsack over worker-capable devices (value = performance,
    weight = the device's entry in ``per_device_max_power``; devices missing
    from the map are unmetered).  One worker instance runs on each selected
    device, truncated to the worker's ``r_max``.
    """
    proc = app.process(worker)
    for d in per_device_max_power:
        system.device(d)
    others = [p for p in app.processes if p.name != worker]
    base = _round_robin_entries(system, others, caps, fill=False)
    required = {d for d, _ in base}
    paid = sum(per_device_max_power.get(d, 0.0) for d in required)
    if paid > limit:
        names = ", ".join(p.name for p in others)
        raise InfeasibleMappingError(
            f"devices required by {names} draw {paid} W > limit {limit} W")
    items = [
        KnapsackItem(d, system.device(d).performance,
                     0.0 if d in required else float(per_device_max_power.get(d, 0.0)))
        for d in system.device_ids if caps.get(d, worker) > 0
    ]
    picked = greedy_power_knapsack(items, limit - paid).devices
    if proc.r_max != UNBOUNDED:
        picked = picked[:int(proc.r_max)]
    if len(picked) < proc.r_min:
        raise InfeasibleMappingError(
            f"only {len(picked)} {worker!r} device(s) fit under {limit} W; r_min is {proc.r_min}")
    entries = dict(base)
    entries.update({(d, worker): 1 for d in picked})
    return _check(system, app, caps, Mapping(entries))


# -- enumeration ----------------------------------------------------------------------


def _count_vectors(caps_row: list[int], lo: int, hi: float) -> dict[int, list[tuple]]:
    by_total: dict[int, list[tuple]] = {}
    for vec in itertools.product(*(range(k + 1) for k in caps_row)):
        s = sum(vec)
        if lo <= s <= hi:
            by_total.setdefault(s, []).append(vec)
    return by_total


def iter_mappings(system: SystemModel, app: Application, caps: Capabilities) -> Iterator[Mapping]:
    """All feasible mappings, fewest instances first, then lexicographic.

    Within one instance count, mappings compare by their sorted list of
    ``(process index, device id)`` placements.
    """
    per_proc = []
    for proc in app.processes:
        devices = [d for d in system.device_ids if caps.get(d, proc.name) > 0]
        vectors = _count_vectors([caps.get(d, proc.name) for d in devices], proc.r_min, proc.r_max)
        if not vectors:
            return
        per_proc.append((proc.name, devices, vectors))

    lo = sum(min(v) for _, _, v in per_proc)
    hi = sum(max(v) for _, _, v in per_proc)
    for total in range(lo, hi + 1):
        level = []
        for split in itertools.product(*(sorted(v) for _, _, v in per_proc)):
            if sum(split) != total:
                continue
            for combo in itertools.product(*(v[s] for (_, _, v), s in zip(per_proc, split))):
                placement = []
                entries = {}
                for j, ((name, devices, _), vec) in enumerate(zip(per_proc, combo)):
                    for d, n in zip(devices, vec):
                        if n:
                            placement.extend([(j, d)] * n)
                            entries[(d, name)] = n
                level.append((placement, entries))
        level.sort(key=lambda x: x[0])
        for _placement, entries in level:
            yield Mapping(entries)


def enumerate_mappings(system: SystemModel, app: Application, caps: Capabilities,
                       bound: int) -> list[Mapping]:
    if bound < 1:
        raise ValueError("bound must be >= 1")
    return list(itertools.islice(iter_mappings(system, app, caps), bound))
