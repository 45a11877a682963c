"""Structure-preserving learning of coupled rigid-body and SE(3) dynamics.

The package composes exact closed-form Poisson maps (flows of simple test
Hamiltonians of the coupled bracket) into trainable one-step propagators.
Every forward pass conserves the Casimir invariants of its phase space to
rounding, regardless of parameter values, so long rollouts stay on the
correct symplectic leaf even when the fit is imperfect.
"""

from ._version import __version__
from .cases import System, default_params, make_system, system_from_json
from .estimator import PoissonMapRegressor
from .groundtruth import (
    DataPair,
    SamplerConfig,
    Trajectory,
    generate_dataset,
    integrate,
    load_dataset,
    pairs_to_arrays,
    sample_initial,
    save_dataset,
)
from .network import Network, NetworkSpec, build, init_params, load_model, save_model
from .training import TrainConfig, TrainReport, grad, loss, train

__all__ = [
    "__version__",
    "System",
    "default_params",
    "make_system",
    "system_from_json",
    "DataPair",
    "SamplerConfig",
    "Trajectory",
    "generate_dataset",
    "integrate",
    "load_dataset",
    "pairs_to_arrays",
    "sample_initial",
    "save_dataset",
    "Network",
    "NetworkSpec",
    "build",
    "init_params",
    "load_model",
    "save_model",
    "TrainConfig",
    "TrainReport",
    "grad",
    "loss",
    "train",
    "PoissonMapRegressor",
]
