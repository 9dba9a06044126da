"""Time-stepped simulator of satellite-ground collaborative federated
fine-tuning over Walker LEO constellations: link budgets, time-varying
topology, communication planning, and end-to-end round latency accounting.
"""

from .constellation import ConstellationSpec, GroundStation, SatId, TimeGrid
from .fedsim import (
    ModelConfig,
    RoundTiming,
    TopologyProvider,
    WorkloadModel,
    run_training,
    workload_from_model,
)
from .scenario import Scenario, load, loads

__version__ = "0.1.0"

__all__ = [
    "ConstellationSpec",
    "GroundStation",
    "SatId",
    "TimeGrid",
    "ModelConfig",
    "RoundTiming",
    "TopologyProvider",
    "WorkloadModel",
    "run_training",
    "workload_from_model",
    "Scenario",
    "load",
    "loads",
    "__version__",
]
