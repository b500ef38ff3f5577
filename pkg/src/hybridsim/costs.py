"""Time and power modeling functions, plus least-squares calibration.

The shipped models are linear: compute time ``phi * size / performance + psi``,
communication time summed over the links of a route, and device power
interpolated between idle and peak by the fraction of cores in use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ModelDomainError, SingularFitError, ValidationError
from .model import Device, NetworkLink


@dataclass(frozen=True)
class ComputeOpSpec:
    data_size: float
    core_demand: int = 1
    kind: str = "compute"

    def __post_init__(self):
        if self.data_size < 0:
            raise ValidationError("compute data_size must be >= 0", "data_size")
        if int(self.core_demand) != self.core_demand or self.core_demand < 1:
            raise ValidationError("core_demand must be an integer >= 1", "core_demand")


@dataclass(frozen=True)
class CommOpSpec:
    peer: str | None
    tag: int
    data_size: float
    direction: str = "send"

    def __post_init__(self):
        if self.data_size < 0:
            raise ValidationError("communication data_size must be >= 0", "data_size")


@dataclass(frozen=True)
class LinearComputeModel:
    phi: float = 1.0
    psi: float = 0.0
    mpe: float | None = None  # mean percentage error, when produced by a fit

    def __call__(self, op: ComputeOpSpec, device: Device) -> float:
        return comp_time(op, device, self)


def comp_time(op: ComputeOpSpec, device: Device, model: LinearComputeModel) -> float:
    t = model.phi * (op.data_size / device.performance) + model.psi
    if t < 0:
        raise ModelDomainError(
            f"compute time {t} < 0 for size {op.data_size} on {device.id} "
            f"(phi={model.phi}, psi={model.psi})")
    return t


def comm_time(op: CommOpSpec, route: Sequence[NetworkLink]) -> float:
    """Sum of per-hop ``t_startup + size / bandwidth``."""
    if not route:
        raise ValueError("comm_time needs a non-empty route")
    return sum(l.t_startup + op.data_size / l.bandwidth for l in route)


def power_at(device: Device, active_core_demand: int) -> float:
    if active_core_demand >= device.ncores:
        return device.p_peak
    frac = active_core_demand / device.ncores
    # rounding must not push the result past the peak
    return min(device.p_idle + frac * (device.p_peak - device.p_idle), device.p_peak)


@dataclass
class CostRegistry:
    """Compute models keyed by ``"<process>.<op-kind>"``.

    A key may be absent, in which case ``default`` applies.  Any callable
    ``(ComputeOpSpec, Device) -> seconds`` can be registered in place of a
    LinearComputeModel.
    """

    models: dict[str, Callable] = field(default_factory=dict)
    default: Callable = field(default_factory=LinearComputeModel)

    @classmethod
    def from_params(cls, params: dict[str, tuple[float, float]]) -> "CostRegistry":
        return cls({k: LinearComputeModel(phi, psi) for k, (phi, psi) in params.items()})

    def compute_model(self, process: str, kind: str) -> Callable:
        return self.models.get(f"{process}.{kind}", self.default)

    def compute_time(self, process: str, op: ComputeOpSpec, device: Device) -> float:
        t = self.compute_model(process, op.kind)(op, device)
        if t < 0:
            raise ModelDomainError(f"compute model for {process}.{op.kind} returned {t} < 0")
        return t

    def comm_time(self, op: CommOpSpec, route: Sequence[NetworkLink]) -> float:
        return comm_time(op, route) if route else 0.0


def fit_linear_model(samples) -> LinearComputeModel:
    """Ordinary least squares of ``seconds ~ phi * size / performance + psi``.

    ``samples`` is an iterable of ``(data_size, performance, seconds)``.
    The returned model carries the mean percentage error of the fit in
    ``mpe`` (percent; samples with zero observed time are skipped).
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 2:
        raise SingularFitError("need at least two (data_size, performance, seconds) samples")
    x = arr[:, 0] / arr[:, 1]
    y = arr[:, 2]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        if np.all(y == y[0]):
            return LinearComputeModel(0.0, float(y[0]), 0.0)
        raise SingularFitError("all abscissae identical but observed times differ")
    phi = float(xc @ (y - y.mean())) / sxx
    psi = float(y.mean() - phi * x.mean())
    if min(phi * x.min() + psi, phi * x.max() + psi) < 0:
        raise ModelDomainError("fitted model predicts negative time inside the sample range")
    pred = phi * x + psi
    nz = y != 0
    mpe = float(np.mean(np.abs((y[nz] - pred[nz]) / y[nz])) * 100) if nz.any() else 0.0
    return LinearComputeModel(phi, psi, mpe)
