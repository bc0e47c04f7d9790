"""Zeroth-order gradient estimation through black-box ensemble queries.

The estimator probes the scalar batch-mean generator loss at the base batch
and at q jointly perturbed copies, then combines the finite differences along
the Gaussian directions. The result is chained through the generator by
ordinary reverse mode. A white-box oracle computing the exact input gradient
is provided for tests and the true-gradient protocol variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses
from .errors import CapabilityError, ConfigError, ShapeError
from .losses import LossWeights
from .nn import AdamState, Network, adam_step, as_f64, finite_check
from .seeding import derive_rng

MODES = ("gaussian", "sphere")


@dataclass(frozen=True)
class ZOConfig:
    q: int = 10
    smoothing: float = 0.001
    mode: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if not self.smoothing > 0:
            raise ConfigError(f"smoothing must be positive, got {self.smoothing}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class PerturbedBatchSet:
    base: np.ndarray
    directions: tuple[np.ndarray, ...]
    perturbed: tuple[np.ndarray, ...]
    smoothing: float

    @classmethod
    def build(cls, base, directions, smoothing: float) -> "PerturbedBatchSet":
        base = as_f64(base)
        dirs = tuple(as_f64(u) for u in directions)
        for u in dirs:
            if u.shape != base.shape:
                raise ShapeError(f"direction shape {u.shape} != base {base.shape}")
        pert = tuple(base + smoothing * u for u in dirs)
        return cls(base, dirs, pert, smoothing)

    @property
    def q(self) -> int:
        return len(self.directions)


def sample_perturbations(batch: int, dim: int, cfg: ZOConfig,
                         rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """q standard-normal direction batches; sphere mode rescales each row to
    norm sqrt(dim) so the expected squared norm matches the Gaussian mode."""
    if rng is None:
        rng = derive_rng(cfg.seed, "perturb")
    out = []
    for _ in range(cfg.q):
        u = rng.standard_normal((batch, dim))
        if cfg.mode == "sphere":
            norms = np.linalg.norm(u, axis=1, keepdims=True)
            u = u / norms * np.sqrt(dim)
        out.append(u)
    return out


def fd_loss_at(x, z, labels, ens_logits_at_x, global_logits_at_x,
               w: LossWeights, mask: dict[str, bool] | None = None) -> float:
    """Full generator loss at one (possibly perturbed) batch, from logits the
    server already holds; no gradients involved."""
    x = as_f64(x)
    ens = as_f64(ens_logits_at_x)
    if x.shape[0] != ens.shape[0]:
        raise ShapeError(f"batch sizes differ: x {x.shape} vs logits {ens.shape}")
    mask = losses.full_mask() if mask is None else mask
    parts = {}
    if mask.get("fid", True):
        parts["fid"] = losses.fidelity_loss(ens, labels)
    if mask.get("adv", True):
        parts["adv"] = losses.adversarial_loss(ens, global_logits_at_x, w.temperature)
    if mask.get("div", True):
        parts["div"] = losses.diversity_loss(x, z)
    if mask.get("info", True):
        parts["info"] = losses.info_entropy_loss(losses.class_frequency(ens))
    return losses.generator_loss(parts, w, mask)


def zo_input_grad(base_loss: float, perturbed_losses, directions, cfg: ZOConfig) -> np.ndarray:
    """(1/q) sum_i dim * (loss_i - loss_0) / smoothing * u_i.

    dim is the per-sample width of the batch; the scalar batch-mean loss is
    shared by every row, which leaves the estimate dim-scaled relative to the
    classic Gaussian-smoothing estimator (scale absorbed by the learning rate).
    """
    if len(perturbed_losses) != len(directions) or len(directions) != cfg.q:
        raise ShapeError(
            f"expected {cfg.q} losses and directions, got "
            f"{len(perturbed_losses)} and {len(directions)}"
        )
    dim = directions[0].shape[1]
    acc = np.zeros_like(as_f64(directions[0]))
    for loss_i, u in zip(perturbed_losses, directions):
        acc += (dim * (loss_i - base_loss) / cfg.smoothing) * as_f64(u)
    return finite_check(acc / cfg.q, "zo_input_grad")


def chain_to_generator(G: Network, input_grad) -> np.ndarray:
    """Push an input-space gradient through G's cached forward; returns the
    flat parameter gradient."""
    param_grads, _ = G.backward(input_grad)
    return param_grads


def _as_network(model) -> Network:
    reveal = getattr(model, "reveal_model", None)
    if reveal is not None:
        return reveal()
    if isinstance(model, Network):
        return model
    raise CapabilityError(f"cannot obtain a white-box model from {type(model).__name__}")


def true_input_grad(local_models, w: losses.EnsembleWeights, global_model: Network,
                    x_hat, z, labels, loss_weights: LossWeights,
                    mask: dict[str, bool] | None = None) -> np.ndarray:
    """Exact gradient of the full generator loss wrt x_hat by reverse mode
    through every local model, the global model, and the diversity term.

    Requires white-box access: passing black-box client handles raises a
    capability error.
    """
    nets = [_as_network(m) for m in local_models]
    if len(nets) != len(w):
        raise ShapeError(f"{len(nets)} models but {len(w)} weights")
    mask = losses.full_mask() if mask is None else mask
    x_hat = as_f64(x_hat)
    tau = loss_weights.temperature

    local_logits = [net.forward(x_hat, train=True) for net in nets]
    ens = losses.ensemble(local_logits, w)
    global_logits = global_model.forward(x_hat, train=True)

    g_ens = np.zeros_like(ens)
    if mask.get("fid", True):
        g_ens += losses.fidelity_grad(ens, labels)
    if mask.get("adv", True):
        g_ens += -loss_weights.beta_adv * losses.distill_grad_teacher(ens, global_logits, tau)
    if mask.get("info", True):
        g_ens += loss_weights.beta_info * losses.info_entropy_grad(ens)

    grad = np.zeros_like(x_hat)
    for net, wk in zip(nets, w.values):
        _, gx = net.backward(wk * g_ens)
        grad += gx
    if mask.get("adv", True):
        g_glob = -loss_weights.beta_adv * losses.distill_grad_student(ens, global_logits, tau)
        _, gx = global_model.backward(g_glob)
        grad += gx
    if mask.get("div", True):
        grad += loss_weights.beta_div * losses.diversity_grad(x_hat, z)
    return finite_check(grad, "true_input_grad")


def generator_step(G: Network, param_grads, adam_state: AdamState, lr: float) -> Network:
    """One Adam step on the generator's flat parameter vector."""
    adam_step(G.params, as_f64(param_grads), adam_state, lr)
    return G
