"""Time and power simulation of hybrid parallel applications on heterogeneous systems."""

from .costs import (CommOpSpec, ComputeOpSpec, CostRegistry, LinearComputeModel, comm_time,
                    comp_time, fit_linear_model, power_at)
from .engine import SimulationInstance, SimulationResult, integrate_energy, simulate
from .errors import (DeadlockError, DimensionError, ExpansionError, HybridSimError,
                     InfeasibleMappingError, ModelDomainError, ParameterError, ParseError,
                     ResolutionError, RoutingError, SimulationError, SingularFitError,
                     TraceError, ValidationError)
from .mapping import (KnapsackItem, enumerate_mappings, greedy_power_knapsack,
                      round_robin_map, select_and_map_under_limit)
from .model import (UNBOUNDED, Application, Capabilities, Device, Mapping, NetworkLink,
                    ParamSpace, ProcessImpl, SystemModel, load_application, load_system,
                    shortest_route, validate_mapping)
from .pareto import ParetoPoint, pareto_front, pareto_set
from .sweep import Suite, expand_suite, load_instance, load_suite, run_suite

__version__ = "0.1.0"

__all__ = [
    "CommOpSpec", "ComputeOpSpec", "CostRegistry", "LinearComputeModel", "comm_time",
    "comp_time", "fit_linear_model", "power_at", "SimulationInstance", "SimulationResult",
    "integrate_energy", "simulate", "DeadlockError", "DimensionError", "ExpansionError",
    "HybridSimError", "InfeasibleMappingError", "ModelDomainError", "ParameterError",
    "ParseError", "ResolutionError", "RoutingError", "SimulationError", "SingularFitError",
    "TraceError", "ValidationError", "KnapsackItem", "enumerate_mappings",
    "greedy_power_knapsack", "round_robin_map", "select_and_map_under_limit", "UNBOUNDED",
    "Application", "Capabilities", "Device", "Mapping", "NetworkLink", "ParamSpace",
    "ProcessImpl", "SystemModel", "load_application", "load_system", "shortest_route",
    "validate_mapping", "ParetoPoint", "pareto_front", "pareto_set", "Suite", "expand_suite",
    "load_instance", "load_suite", "run_suite",
]
