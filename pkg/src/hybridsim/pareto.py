"""Non-dominated filtering for minimization objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import DimensionError


@dataclass(frozen=True)
class ParetoPoint:
    objectives: tuple[float, ...]
    payload: Any = None

    def __post_init__(self):
        obj = tuple(float(v) for v in self.objectives)
        if not obj:
            raise DimensionError("a Pareto point needs at least one objective")
        if not all(math.isfinite(v) for v in obj):
            raise ValueError(f"objectives must be finite, got {obj}")
        object.__setattr__(self, "objectives", obj)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """``a`` is no worse everywhere and strictly better somewhere."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def _as_points(points) -> list[ParetoPoint]:
    pts = [p if isinstance(p, ParetoPoint) else ParetoPoint(tuple(p)) for p in points]
    dims = {len(p.objectives) for p in pts}
    if len(dims) > 1:
        raise DimensionError(f"points have mixed objective counts {sorted(dims)}")
    return pts


def _keep_2d(objs: list[tuple[float, ...]]) -> list[bool]:
    # Sweep by (f1, f2): a point survives iff its f2 beats every f2 seen at a
    # strictly smaller f1, and it is not beaten by an equal-f1 point with smaller f2.
    order = sorted(range(len(objs)), key=lambda i: objs[i])
    keep = [False] * len(objs)
    best_before = math.inf  # min f2 among points with strictly smaller f1
    i = 0
    while i < len(order):
        j = i
        f1 = objs[order[i]][0]
        while j < len(order) and objs[order[j]][0] == f1:
            j += 1
        group_min = objs[order[i]][1]
        for idx in order[i:j]:
            f2 = objs[idx][1]
            keep[idx] = f2 < best_before and f2 == group_min
        best_before = min(best_before, group_min)
        i = j
    return keep


def _keep_nd(objs: list[tuple[float, ...]]) -> list[bool]:
    order = sorted(range(len(objs)), key=lambda i: objs[i])
    front: list[int] = []
    keep = [False] * len(objs)
    # In lexicographic order no later point can dominate an earlier one, so
    # comparing against the current front is sufficient.
    for idx in order:
        if not any(dominates(objs[f], objs[idx]) for f in front):
            front.append(idx)
            keep[idx] = True
    return keep


def pareto_mask(points) -> list[bool]:
    pts = _as_points(points)
    if not pts:
        return []
    objs = [p.objectives for p in pts]
    if len(objs[0]) == 1:
        lo = min(o[0] for o in objs)
        return [o[0] == lo for o in objs]
    return _keep_2d(objs) if len(objs[0]) == 2 else _keep_nd(objs)


def pareto_set(points) -> list[ParetoPoint]:
    """Non-dominated points in input order; identical objective vectors all survive."""
    pts = _as_points(points)
    return [p for p, k in zip(pts, pareto_mask(pts)) if k]


def pareto_front(points) -> list[tuple[float, ...]]:
    """Objective vectors of the Pareto set, ascending by the first objective."""
    return sorted(p.objectives for p in pareto_set(points))
