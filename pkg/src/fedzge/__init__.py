"""Desk-scale simulator for data-free federated learning where a server-side
generator is trained through black-box clients by zeroth-order gradient
estimation, with distillation baselines and byte-exact communication
accounting."""

from .backend import BACKEND_NAME, active_backend
from .comms import (
    CommLedger,
    MethodCommSpec,
    PayloadShape,
    RESNET18_PARAMS,
    distill_comm_spec,
    fedzge_comm_spec,
    formula_bytes,
    param_comm_spec,
    to_gib,
    whitebox_comm_spec,
)
from .data import Dataset, PartitionSpec, dirichlet_partition, load_csv, make_synthetic, save_csv
from .errors import (
    CapabilityError,
    ConfigError,
    DataFormatError,
    FedzgeError,
    NonFiniteError,
    ShapeError,
    UnsupportedMethodError,
)
from .federation import (
    ClientHandle,
    ExperimentConfig,
    ExperimentResult,
    FederationConfig,
    RoundMetrics,
    RunResult,
    ServerState,
    World,
    build_world,
    evaluate,
    run_experiment,
    run_world,
    sample_clients,
)
from .losses import EnsembleWeights, LossWeights
from .models import ClassifierSpec, GeneratorSpec, build_classifier, build_generator, generate
from .nn import AdamState, Network, adam_step, cross_entropy, kl_div, softmax_t
from .seeding import derive_rng, derive_seed
from .zo import (
    PerturbedBatchSet,
    ZOConfig,
    chain_to_generator,
    fd_loss_at,
    sample_perturbations,
    true_input_grad,
    zo_input_grad,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "BACKEND_NAME", "CapabilityError", "ClassifierSpec",
    "ClientHandle", "CommLedger", "ConfigError", "DataFormatError", "Dataset",
    "EnsembleWeights", "ExperimentConfig", "ExperimentResult", "FederationConfig",
    "FedzgeError", "GeneratorSpec", "LossWeights", "MethodCommSpec", "Network",
    "NonFiniteError", "PartitionSpec", "PayloadShape", "PerturbedBatchSet",
    "RESNET18_PARAMS", "RoundMetrics", "RunResult", "ServerState", "ShapeError",
    "UnsupportedMethodError", "World", "ZOConfig", "active_backend", "adam_step",
    "build_classifier", "build_generator", "build_world", "chain_to_generator",
    "cross_entropy", "derive_rng", "derive_seed", "dirichlet_partition",
    "distill_comm_spec", "evaluate", "fd_loss_at", "fedzge_comm_spec",
    "formula_bytes", "generate", "kl_div", "load_csv", "make_synthetic",
    "param_comm_spec", "run_experiment", "run_world", "sample_clients",
    "sample_perturbations", "save_csv", "softmax_t", "to_gib", "true_input_grad",
    "whitebox_comm_spec", "zo_input_grad",
]
