"""The federated protocol engine.

Clients sit behind :class:`ClientHandle`, whose black-box capability surface
exposes only forward passes and local training; parameters never cross it
unless the handle was created white-box. The server orchestrates rounds,
records every payload in a :class:`~fedzge.comms.CommLedger`, and appends a
phase trace that can be compared against the expected round structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import comms, losses, zo
from .comms import DOWN, UP, CommLedger, PayloadShape
from .data import Dataset, PartitionSpec, dirichlet_partition, make_synthetic
from .errors import CapabilityError, ConfigError, UnsupportedMethodError
from .losses import EnsembleWeights, LossWeights
from .models import (
    ClassifierSpec,
    GeneratorSpec,
    build_classifier,
    build_generator,
    generate,
)
from .nn import AdamState, Network, adam_step, cross_entropy, cross_entropy_grad
from .seeding import derive_rng, derive_seed
from .zo import PerturbedBatchSet, ZOConfig, sample_perturbations

METHODS = ("fedzge", "fedavg", "mhat", "dsfl", "whitebox_datafree")
ABLATION_FLAGS = ("fid", "adv", "div", "info", "localdistill")

FEDZGE_PHASES = (
    "sample_clients",
    "local_update",
    "generate",
    "distribute_synthetic",
    "local_predict",
    "aggregate",
    "generator_update",
    "global_distill",
    "distribute_ensemble",
    "local_distill",
)

# the payload kinds allowed to cross the boundary in black-box operation
FEDZGE_PAYLOAD_KINDS = frozenset(
    {
        comms.KIND_SYNTHETIC,
        comms.KIND_PERTURBED,
        comms.KIND_LOCAL_LOGITS,
        comms.KIND_ENSEMBLE,
    }
)

# width multipliers cycled over clients in the heterogeneous setting
HETERO_RATIOS = (1.0, 0.75, 0.5)


def ablation_mask(flags: tuple[str, ...]) -> dict[str, bool]:
    """Generator-term mask from ablation flags; 'fid' keeps only fidelity."""
    for f in flags:
        if f not in ABLATION_FLAGS:
            raise ConfigError(f"unknown ablation flag {f!r}; expected one of {ABLATION_FLAGS}")
    mask = losses.full_mask()
    if "fid" in flags:
        mask.update(adv=False, div=False, info=False)
    for f in flags:
        if f in ("adv", "div", "info"):
            mask[f] = False
    return mask


@dataclass(frozen=True)
class FederationConfig:
    num_clients: int = 10
    sampling_fraction: float = 1.0
    rounds: int = 100
    local_epochs: int = 10
    local_distill_epochs: int = 10
    global_distill_epochs: int = 10
    lr_local: float = 0.01
    lr_global: float = 0.01
    lr_generator: float = 0.001
    batch: int = 500
    local_batch_size: int = 256
    method: str = "fedzge"
    seed: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    zo: ZOConfig = field(default_factory=ZOConfig)
    ablation: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ablation", tuple(self.ablation))
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not 0 < self.sampling_fraction <= 1:
            raise ConfigError(
                f"sampling_fraction must be in (0, 1], got {self.sampling_fraction}"
            )
        for name in ("num_clients", "rounds", "local_epochs", "local_distill_epochs",
                     "global_distill_epochs", "batch", "local_batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        ablation_mask(self.ablation)

    @property
    def mask(self) -> dict[str, bool]:
        return ablation_mask(self.ablation)

    @property
    def local_distill_enabled(self) -> bool:
        return "localdistill" not in self.ablation


@dataclass(frozen=True)
class ExperimentConfig:
    """A full experiment: data, models, protocol, and run bookkeeping."""

    federation: FederationConfig = field(default_factory=FederationConfig)
    num_classes: int = 4
    dim: int = 16
    train_per_class: int = 500
    test_per_class: int = 200
    aux_per_class: int = 500
    spread: float = 0.35
    alpha: float = 1.0
    client_hidden: tuple[int, ...] = (32,)
    global_hidden: tuple[int, ...] = (32,)
    activation: str = "relu"
    heterogeneous: bool = False
    noise_dim: int = 16
    generator_hidden: tuple[int, ...] = (48, 48)
    seeds: tuple[int, ...] = (0,)
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "client_hidden", tuple(self.client_hidden))
        object.__setattr__(self, "global_hidden", tuple(self.global_hidden))
        object.__setattr__(self, "generator_hidden", tuple(self.generator_hidden))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if len(self.seeds) < 1:
            raise ConfigError("at least one seed required")


@dataclass(frozen=True)
class RoundMetrics:
    round_index: int
    accuracy: float
    loss_fid: float
    loss_adv: float
    loss_div: float
    loss_info: float
    loss_gd: float
    bytes_down: int
    bytes_up: int
    participants: tuple[int, ...]


# ---------------------------------------------------------------------------
# clients
# ---------------------------------------------------------------------------

class ClientHandle:
    """A client's capability surface.

    Black-box handles answer forward passes (logits) and run their own
    training; the model and its parameters stay private. White-box handles
    (tests and the true-gradient variant) additionally reveal the model.
    """

    def __init__(self, client_id: int, dataset: Dataset, model: Network,
                 lr: float, batch_size: int, seed: int, whitebox: bool = False):
        self.client_id = client_id
        self._data = dataset
        self._model = model
        self._adam = AdamState.for_params(model.num_params)
        self._lr = lr
        self._batch_size = batch_size
        self._rng = derive_rng(seed, "client", client_id)
        self._whitebox = whitebox

    def sample_count(self) -> int:
        return self._data.size

    def predict(self, batch: np.ndarray) -> np.ndarray:
        return self._model.forward(batch, train=False)

    def local_train(self, epochs: int, lr: float | None = None) -> float:
        """Cross-entropy epochs over the private shard; returns the final
        epoch's mean minibatch loss."""
        lr = self._lr if lr is None else lr
        last = 0.0
        for _ in range(epochs):
            order = self._rng.permutation(self._data.size)
            epoch_losses = []
            for start in range(0, order.size, self._batch_size):
                idx = order[start:start + self._batch_size]
                xb = self._data.samples[idx]
                yb = self._data.labels[idx]
                logits = self._model.forward(xb, train=True)
                epoch_losses.append(cross_entropy(logits, yb))
                grads, _ = self._model.backward(cross_entropy_grad(logits, yb))
                adam_step(self._model.params, grads, self._adam, lr)
            last = float(np.mean(epoch_losses))
        return last

    def local_distill(self, x_hat: np.ndarray, ens_logits: np.ndarray, epochs: int,
                      tau: float, tau_sq_correction: bool = False) -> float:
        """Epochs of KL toward the ensemble's soft targets on the synthetic batch."""
        last = 0.0
        for _ in range(epochs):
            logits = self._model.forward(x_hat, train=True)
            last = losses.local_distill_loss(ens_logits, logits, tau)
            g = losses.distill_grad_student(ens_logits, logits, tau, tau_sq_correction)
            grads, _ = self._model.backward(g)
            adam_step(self._model.params, grads, self._adam, self._lr)
        return last

    def local_fit(self, x: np.ndarray, y: np.ndarray, epochs: int) -> float:
        """Cross-entropy epochs on a supplied labeled batch."""
        last = 0.0
        for _ in range(epochs):
            logits = self._model.forward(x, train=True)
            last = cross_entropy(logits, y)
            grads, _ = self._model.backward(cross_entropy_grad(logits, y))
            adam_step(self._model.params, grads, self._adam, self._lr)
        return last

    def reveal_model(self) -> Network:
        if not self._whitebox:
            raise CapabilityError(
                f"client {self.client_id} is black-box: parameters are not shared"
            )
        return self._model

    # parameter-exchange methods only (fedavg); guarded like reveal_model
    def get_params(self) -> np.ndarray:
        return self.reveal_model().get_params()

    def set_params(self, vec: np.ndarray) -> None:
        self.reveal_model().set_params(vec)

    @property
    def num_params(self) -> int:
        return self._model.num_params


@dataclass
class ServerState:
    global_model: Network
    generator: Network
    adam_global: AdamState
    adam_generator: AdamState
    seed: int
    round_index: int = 0
    phase_trace: list[str] = field(default_factory=list)
    ledger: CommLedger = field(default_factory=CommLedger)


@dataclass
class World:
    exp: ExperimentConfig
    seed: int
    train: Dataset
    test: Dataset
    aux: Dataset
    shards: list[Dataset]
    clients: list[ClientHandle]
    state: ServerState


@dataclass(frozen=True)
class RunResult:
    seed: int
    metrics: tuple[RoundMetrics, ...]
    ledger: CommLedger

    @property
    def final_accuracy(self) -> float:
        return self.metrics[-1].accuracy


@dataclass(frozen=True)
class ExperimentResult:
    method: str
    runs: tuple[RunResult, ...]

    @property
    def final_accuracies(self) -> np.ndarray:
        return np.array([r.final_accuracy for r in self.runs])

    @property
    def mean_final_accuracy(self) -> float:
        return float(self.final_accuracies.mean())

    @property
    def std_final_accuracy(self) -> float:
        return float(self.final_accuracies.std())

    @property
    def total_bytes(self) -> int:
        return self.runs[0].ledger.total_bytes()


# ---------------------------------------------------------------------------
# world construction
# ---------------------------------------------------------------------------

def client_specs(exp: ExperimentConfig) -> list[ClassifierSpec]:
    """Per-client classifier specs; heterogeneous mode cycles width ratios."""
    specs = []
    for k in range(exp.federation.num_clients):
        hidden = exp.client_hidden
        if exp.heterogeneous:
            ratio = HETERO_RATIOS[k % len(HETERO_RATIOS)]
            hidden = tuple(max(4, round(h * ratio)) for h in hidden)
        specs.append(ClassifierSpec(exp.dim, hidden, exp.num_classes, exp.activation))
    return specs


def build_world(exp: ExperimentConfig, seed: int) -> World:
    """All per-run state (data, shards, clients, server) derived from one seed."""
    fed = exp.federation
    train = make_synthetic(exp.num_classes, exp.dim, exp.train_per_class,
                           exp.spread, derive_seed(seed, "train-data"))
    test = make_synthetic(exp.num_classes, exp.dim, exp.test_per_class,
                          exp.spread, derive_seed(seed, "test-data"))
    aux = make_synthetic(exp.num_classes, exp.dim, exp.aux_per_class,
                         exp.spread, derive_seed(seed, "aux-data"))
    shards = dirichlet_partition(
        train, PartitionSpec(fed.num_clients, exp.alpha, derive_seed(seed, "partition"))
    )
    whitebox = fed.method in ("fedavg", "whitebox_datafree")
    clients = [
        ClientHandle(
            k, shards[k], build_classifier(spec, derive_seed(seed, "client-model", k)),
            fed.lr_local, fed.local_batch_size, derive_seed(seed, "client-rng", k),
            whitebox=whitebox,
        )
        for k, spec in enumerate(client_specs(exp))
    ]
    global_model = build_classifier(
        ClassifierSpec(exp.dim, exp.global_hidden, exp.num_classes, exp.activation),
        derive_seed(seed, "global-model"),
    )
    generator = build_generator(
        GeneratorSpec(exp.noise_dim, exp.num_classes, exp.generator_hidden, exp.dim),
        derive_seed(seed, "generator"),
    )
    state = ServerState(
        global_model=global_model,
        generator=generator,
        adam_global=AdamState.for_params(global_model.num_params),
        adam_generator=AdamState.for_params(generator.num_params),
        seed=seed,
    )
    return World(exp, seed, train, test, aux, shards, clients, state)


# ---------------------------------------------------------------------------
# protocol building blocks
# ---------------------------------------------------------------------------

def sample_clients(num_clients: int, fraction: float, rng: np.random.Generator) -> list[int]:
    """ceil(fraction * K) distinct ids, uniform, ascending."""
    m = max(1, math.ceil(fraction * num_clients - 1e-9))
    return sorted(int(i) for i in rng.choice(num_clients, size=m, replace=False))


def local_update(client: ClientHandle, epochs: int, lr: float) -> float:
    return client.local_train(epochs, lr)


def local_predict(client: ClientHandle, batches: list[np.ndarray]) -> list[np.ndarray]:
    return [client.predict(b) for b in batches]


def server_aggregate(all_client_logits: list[list[np.ndarray]],
                     weights: EnsembleWeights) -> list[np.ndarray]:
    """Per-batch ensembles from each client's q+1 logit batches."""
    n_batches = len(all_client_logits[0])
    return [
        losses.ensemble([cl[j] for cl in all_client_logits], weights)
        for j in range(n_batches)
    ]


def evaluate(model: Network, test: Dataset) -> float:
    """Argmax accuracy; argmax breaks ties toward the lowest class index."""
    logits = model.forward(test.samples, train=False)
    pred = np.argmax(logits, axis=1) + 1
    return float(np.mean(pred == test.labels))


def participant_weights(clients: list[ClientHandle], ids: list[int]) -> EnsembleWeights:
    return EnsembleWeights.from_counts([clients[k].sample_count() for k in ids])


# ---------------------------------------------------------------------------
# round runners
# ---------------------------------------------------------------------------

def _distill_global(state: ServerState, x_hat: np.ndarray, ens_logits: np.ndarray,
                    epochs: int, lw: LossWeights, lr: float) -> float:
    """E epochs of KL toward the ensemble on the synthetic batch; mean loss."""
    vals = []
    for _ in range(epochs):
        logits = state.global_model.forward(x_hat, train=True)
        vals.append(losses.global_distill_loss(ens_logits, logits, lw.temperature))
        g = losses.distill_grad_student(ens_logits, logits, lw.temperature,
                                        lw.tau_sq_correction)
        grads, _ = state.global_model.backward(g)
        adam_step(state.global_model.params, grads, state.adam_global, lr)
    return float(np.mean(vals))


def _loss_parts(x_hat, z, y_hat, ens_logits, global_logits, lw: LossWeights,
                mask: dict[str, bool]) -> dict[str, float]:
    """The four generator-loss terms at a batch; masked terms are exactly 0."""
    return {
        "fid": losses.fidelity_loss(ens_logits, y_hat) if mask["fid"] else 0.0,
        "adv": losses.adversarial_loss(ens_logits, global_logits, lw.temperature)
        if mask["adv"] else 0.0,
        "div": losses.diversity_loss(x_hat, z) if mask["div"] else 0.0,
        "info": losses.info_entropy_loss(losses.class_frequency(ens_logits))
        if mask["info"] else 0.0,
    }


def run_round_fedzge(world: World, test: Dataset | None = None) -> RoundMetrics:
    """One full round: local training, generation, black-box ZO generator
    update, global distillation, and local distillation."""
    exp, fed, state = world.exp, world.exp.federation, world.state
    test = world.test if test is None else test
    t = state.round_index
    trace = state.phase_trace
    lw, mask = fed.loss_weights, fed.mask
    whitebox = fed.method == "whitebox_datafree"

    ids = sample_clients(fed.num_clients, fed.sampling_fraction,
                         derive_rng(state.seed, "sample", t))
    trace.append("sample_clients")

    for k in ids:
        world.clients[k].local_train(fed.local_epochs)
    trace.append("local_update")

    z, y_hat, x_hat = generate(state.generator, fed.batch, exp.num_classes,
                               exp.noise_dim, derive_seed(state.seed, "generate", t))
    trace.append("generate")

    if whitebox:
        batches = [x_hat]
        pbs = None
    else:
        directions = sample_perturbations(fed.batch, exp.dim, fed.zo,
                                          derive_rng(state.seed, "perturb", t))
        pbs = PerturbedBatchSet.build(x_hat, directions, fed.zo.smoothing)
        batches = [pbs.base, *pbs.perturbed]
    synth_shape = PayloadShape(fed.batch * exp.dim)
    for k in ids:
        state.ledger.record(t, k, DOWN, comms.KIND_SYNTHETIC, synth_shape)
        for _ in range(len(batches) - 1):
            state.ledger.record(t, k, DOWN, comms.KIND_PERTURBED, synth_shape)
    trace.append("distribute_synthetic")

    logit_shape = PayloadShape(fed.batch * exp.num_classes)
    per_client_logits = []
    for k in ids:
        outs = local_predict(world.clients[k], batches)
        per_client_logits.append(outs)
        for _ in outs:
            state.ledger.record(t, k, UP, comms.KIND_LOCAL_LOGITS, logit_shape)
        if whitebox:
            state.ledger.record(t, k, UP, comms.KIND_PARAMS,
                                PayloadShape(world.clients[k].num_params))
    trace.append("local_predict")

    w = participant_weights(world.clients, ids)
    ens_batches = server_aggregate(per_client_logits, w)
    ens0 = ens_batches[0]
    trace.append("aggregate")

    glob0 = state.global_model.forward(x_hat, train=False)
    if whitebox:
        models = [world.clients[k].reveal_model() for k in ids]
        input_grad = zo.true_input_grad(models, w, state.global_model,
                                        x_hat, z, y_hat, lw, mask)
    else:
        base_loss = zo.fd_loss_at(x_hat, z, y_hat, ens0, glob0, lw, mask)
        pert_losses = []
        for xb, ens_b in zip(pbs.perturbed, ens_batches[1:]):
            glob_b = state.global_model.forward(xb, train=False)
            pert_losses.append(zo.fd_loss_at(xb, z, y_hat, ens_b, glob_b, lw, mask))
        input_grad = zo.zo_input_grad(base_loss, pert_losses, pbs.directions, fed.zo)
    state.generator.forward(z, labels=y_hat, train=True)
    gen_grads = zo.chain_to_generator(state.generator, input_grad)
    zo.generator_step(state.generator, gen_grads, state.adam_generator, fed.lr_generator)
    parts = _loss_parts(x_hat, z, y_hat, ens0, glob0, lw, mask)
    trace.append("generator_update")

    loss_gd = _distill_global(state, x_hat, ens0, fed.global_distill_epochs,
                              lw, fed.lr_global)
    trace.append("global_distill")

    ens_shape = PayloadShape(fed.batch * exp.num_classes)
    for k in ids:
        state.ledger.record(t, k, DOWN, comms.KIND_ENSEMBLE, ens_shape)
    trace.append("distribute_ensemble")

    if fed.local_distill_enabled:
        for k in ids:
            world.clients[k].local_distill(x_hat, ens0, fed.local_distill_epochs,
                                           lw.temperature, lw.tau_sq_correction)
    trace.append("local_distill")

    acc = evaluate(state.global_model, test)
    metrics = RoundMetrics(
        round_index=t, accuracy=acc,
        loss_fid=parts["fid"], loss_adv=parts["adv"],
        loss_div=parts["div"], loss_info=parts["info"], loss_gd=loss_gd,
        bytes_down=state.ledger.total_bytes(DOWN, t),
        bytes_up=state.ledger.total_bytes(UP, t),
        participants=tuple(ids),
    )
    state.round_index += 1
    return metrics


def run_round_fedavg(world: World) -> RoundMetrics:
    """Broadcast parameters, train locally, upload, and average by N_k/N."""
    fed, state = world.exp.federation, world.state
    t = state.round_index
    n_params = state.global_model.num_params
    for c in world.clients:
        if c.num_params != n_params:
            raise UnsupportedMethodError(
                "fedavg requires homogeneous architectures: client "
                f"{c.client_id} has {c.num_params} parameters, global has {n_params}"
            )
    ids = sample_clients(fed.num_clients, fed.sampling_fraction,
                         derive_rng(state.seed, "sample", t))
    state.phase_trace.append("sample_clients")

    shape = PayloadShape(n_params)
    for k in ids:
        world.clients[k].set_params(state.global_model.get_params())
        state.ledger.record(t, k, DOWN, comms.KIND_PARAMS, shape)
    state.phase_trace.append("broadcast_parameters")

    for k in ids:
        world.clients[k].local_train(fed.local_epochs)
    state.phase_trace.append("local_update")

    w = participant_weights(world.clients, ids)
    avg = np.zeros(n_params)
    for k, wk in zip(ids, w.values):
        avg += wk * world.clients[k].get_params()
        state.ledger.record(t, k, UP, comms.KIND_PARAMS, shape)
    state.global_model.set_params(avg)
    state.phase_trace.append("aggregate_parameters")

    acc = evaluate(state.global_model, world.test)
    metrics = RoundMetrics(
        round_index=t, accuracy=acc,
        loss_fid=0.0, loss_adv=0.0, loss_div=0.0, loss_info=0.0, loss_gd=0.0,
        bytes_down=state.ledger.total_bytes(DOWN, t),
        bytes_up=state.ledger.total_bytes(UP, t),
        participants=tuple(ids),
    )
    state.round_index += 1
    return metrics


def run_round_distill(world: World, labeled: bool) -> RoundMetrics:
    """Auxiliary-data distillation round; ``labeled`` adds the label/global
    logit downlink and client fine-tuning."""
    exp, fed, state = world.exp, world.exp.federation, world.state
    t = state.round_index
    lw = fed.loss_weights

    ids = sample_clients(fed.num_clients, fed.sampling_fraction,
                         derive_rng(state.seed, "sample", t))
    state.phase_trace.append("sample_clients")

    for k in ids:
        world.clients[k].local_train(fed.local_epochs)
    state.phase_trace.append("local_update")

    rng = derive_rng(state.seed, "aux", t)
    take = min(fed.batch, world.aux.size)
    idx = rng.choice(world.aux.size, size=take, replace=False)
    x_p, y_p = world.aux.samples[idx], world.aux.labels[idx]
    global_logits = state.global_model.forward(x_p, train=False)
    data_shape = PayloadShape(take * exp.dim)
    logit_shape = PayloadShape(take * exp.num_classes)
    for k in ids:
        state.ledger.record(t, k, DOWN, comms.KIND_AUX_DATA, data_shape)
        if labeled:
            state.ledger.record(t, k, DOWN, comms.KIND_AUX_LABELS, PayloadShape(take))
            state.ledger.record(t, k, DOWN, comms.KIND_GLOBAL_LOGITS, logit_shape)
    state.phase_trace.append("distribute_aux")

    per_client = []
    for k in ids:
        logits = world.clients[k].predict(x_p)
        per_client.append(logits)
        state.ledger.record(t, k, UP, comms.KIND_LOCAL_LOGITS, logit_shape)
    state.phase_trace.append("local_predict")

    w = participant_weights(world.clients, ids)
    ens = losses.ensemble(per_client, w)
    state.phase_trace.append("aggregate")

    loss_gd = _distill_global(state, x_p, ens, fed.global_distill_epochs,
                              lw, fed.lr_global)
    state.phase_trace.append("global_distill")

    if labeled:
        for k in ids:
            world.clients[k].local_distill(x_p, global_logits, fed.local_distill_epochs,
                                           lw.temperature, lw.tau_sq_correction)
            world.clients[k].local_fit(x_p, y_p, fed.local_distill_epochs)
    else:
        for k in ids:
            state.ledger.record(t, k, DOWN, comms.KIND_ENSEMBLE, logit_shape)
            world.clients[k].local_distill(x_p, ens, fed.local_distill_epochs,
                                           lw.temperature, lw.tau_sq_correction)
    state.phase_trace.append("local_refine")

    acc = evaluate(state.global_model, world.test)
    metrics = RoundMetrics(
        round_index=t, accuracy=acc,
        loss_fid=0.0, loss_adv=0.0, loss_div=0.0, loss_info=0.0, loss_gd=loss_gd,
        bytes_down=state.ledger.total_bytes(DOWN, t),
        bytes_up=state.ledger.total_bytes(UP, t),
        participants=tuple(ids),
    )
    state.round_index += 1
    return metrics


# ---------------------------------------------------------------------------
# run drivers
# ---------------------------------------------------------------------------

def run_world(exp: ExperimentConfig, seed: int) -> RunResult:
    """One seeded run of the configured method over all rounds."""
    world = build_world(exp, seed)
    fed = exp.federation
    rounds = []
    for _ in range(fed.rounds):
        if fed.method in ("fedzge", "whitebox_datafree"):
            rounds.append(run_round_fedzge(world))
        elif fed.method == "fedavg":
            rounds.append(run_round_fedavg(world))
        elif fed.method == "mhat":
            rounds.append(run_round_distill(world, labeled=True))
        elif fed.method == "dsfl":
            rounds.append(run_round_distill(world, labeled=False))
        else:
            raise UnsupportedMethodError(f"no runner for method {fed.method!r}")
    return RunResult(seed=seed, metrics=tuple(rounds), ledger=world.state.ledger)


def run_fedavg(exp: ExperimentConfig) -> ExperimentResult:
    return run_experiment(_with_method(exp, "fedavg"))


def run_distill_fl(exp: ExperimentConfig, labeled: bool) -> ExperimentResult:
    return run_experiment(_with_method(exp, "mhat" if labeled else "dsfl"))


def run_whitebox_datafree(exp: ExperimentConfig) -> ExperimentResult:
    return run_experiment(_with_method(exp, "whitebox_datafree"))


def _with_method(exp: ExperimentConfig, method: str) -> ExperimentConfig:
    import dataclasses

    if exp.federation.method == method:
        return exp
    return dataclasses.replace(
        exp, federation=dataclasses.replace(exp.federation, method=method)
    )


def run_experiment(exp: ExperimentConfig) -> ExperimentResult:
    """Run every seed and aggregate mean/std of the final accuracy."""
    runs = tuple(run_world(exp, s) for s in exp.seeds)
    return ExperimentResult(method=exp.federation.method, runs=runs)
