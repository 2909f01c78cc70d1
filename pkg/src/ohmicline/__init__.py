"""Matrix-product-state simulator of an Ohmic spin-boson system: a qubit
coupled to a discretized one-dimensional photon waveguide, plus a
flux-qubit circuit estimate of the attainable coupling."""

__version__ = "0.1.0"

from .config import ExperimentConfig, OhmicConfigError, parse_config
from .model import SpinBosonModel, make_model, spectral_density, \
    spectral_alpha, effective_frequency
from .mps import CompressionParams, MpsState, MpoOperator
from .propagate import TrotterPlan, KrylovParams, evolve, ground_state
from .experiments import ExperimentRecord, run_scenario, write_record

__all__ = [
    "__version__",
    "ExperimentConfig", "OhmicConfigError", "parse_config",
    "SpinBosonModel", "make_model", "spectral_density", "spectral_alpha",
    "effective_frequency",
    "CompressionParams", "MpsState", "MpoOperator",
    "TrotterPlan", "KrylovParams", "evolve", "ground_state",
    "ExperimentRecord", "run_scenario", "write_record",
]
