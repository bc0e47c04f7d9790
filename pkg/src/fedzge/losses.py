"""Generator and distillation objectives over logits, plus their exact
gradients with respect to the logits or inputs they touch.

Conventions used throughout: natural logarithms; every loss is a batch mean;
softened distributions come from :func:`fedzge.nn.softmax_t`. The temperature
tau**2 correction sometimes applied to distillation gradients is off by
default and controlled by ``LossWeights.tau_sq_correction``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ShapeError
from .nn import PROB_FLOOR, as_f64, cross_entropy, cross_entropy_grad, kl_div, softmax_t

GENERATOR_TERMS = ("fid", "adv", "div", "info")


@dataclass(frozen=True)
class EnsembleWeights:
    """Participating clients' sample-count weights N_k / N, ascending id order."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", as_f64(self.values))
        if self.values.ndim != 1 or self.values.size == 0:
            raise ShapeError(f"weights must be a non-empty vector, got {self.values.shape}")
        if self.values.min() < 0 or abs(self.values.sum() - 1.0) > 1e-12:
            raise ShapeError(
                f"weights must be non-negative and sum to 1, got sum {self.values.sum()!r}"
            )

    @classmethod
    def from_counts(cls, counts) -> "EnsembleWeights":
        counts = np.asarray(counts, dtype=np.float64)
        return cls(counts / counts.sum())

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class LossWeights:
    beta_adv: float = 1.0
    beta_div: float = 1.0
    beta_info: float = 1.0
    temperature: float = 5.0
    tau_sq_correction: bool = False

    def __post_init__(self):
        vals = (self.beta_adv, self.beta_div, self.beta_info, self.temperature)
        if not all(np.isfinite(v) for v in vals):
            raise ShapeError(f"loss weights must be finite, got {vals}")
        if self.temperature <= 0:
            raise ShapeError(f"temperature must be positive, got {self.temperature}")


def full_mask() -> dict[str, bool]:
    return {t: True for t in GENERATOR_TERMS}


def ensemble(local_logits: list[np.ndarray], w: EnsembleWeights) -> np.ndarray:
    """Weighted sum of client logit batches, accumulated in list order."""
    if len(local_logits) != len(w):
        raise ShapeError(f"{len(local_logits)} logit batches but {len(w)} weights")
    shape = local_logits[0].shape
    out = np.zeros(shape)
    for logits, wk in zip(local_logits, w.values):
        logits = as_f64(logits)
        if logits.shape != shape:
            raise ShapeError(f"client logits shapes differ: {logits.shape} vs {shape}")
        out += wk * logits
    return out


# ---------------------------------------------------------------------------
# generator loss terms
# ---------------------------------------------------------------------------

def fidelity_loss(ens_logits, labels) -> float:
    return cross_entropy(ens_logits, labels)


def fidelity_grad(ens_logits, labels) -> np.ndarray:
    return cross_entropy_grad(ens_logits, labels)


def global_distill_loss(ens_logits, global_logits, tau: float) -> float:
    return kl_div(softmax_t(ens_logits, tau), softmax_t(global_logits, tau))


def adversarial_loss(ens_logits, global_logits, tau: float) -> float:
    return -global_distill_loss(ens_logits, global_logits, tau)


def distill_grad_student(teacher_logits, student_logits, tau: float,
                         tau_sq_correction: bool = False) -> np.ndarray:
    """Gradient of kl_div(softmax_t(teacher), softmax_t(student)) wrt student logits."""
    p = softmax_t(teacher_logits, tau)
    q = softmax_t(student_logits, tau)
    g = (q - p) / (p.shape[0] * tau)
    return g * tau * tau if tau_sq_correction else g


def distill_grad_teacher(teacher_logits, student_logits, tau: float,
                         tau_sq_correction: bool = False) -> np.ndarray:
    """Gradient of the same KL wrt the teacher logits."""
    p = softmax_t(teacher_logits, tau)
    q = softmax_t(student_logits, tau)
    r = np.log(np.maximum(p, PROB_FLOOR)) - np.log(np.maximum(q, PROB_FLOOR))
    inner = r - (p * r).sum(axis=1, keepdims=True)
    g = p * inner / (p.shape[0] * tau)
    return g * tau * tau if tau_sq_correction else g


def diversity_loss(x_hat, z) -> float:
    """exp of the mean over all (i, j) pairs of -|x_i - x_j| * |z_i - z_j|."""
    x_hat = as_f64(x_hat)
    z = as_f64(z)
    if x_hat.ndim != 2 or z.ndim != 2 or x_hat.shape[0] != z.shape[0]:
        raise ShapeError(f"batch sizes differ: {x_hat.shape} vs {z.shape}")
    if x_hat.shape[0] == 0:
        raise ShapeError("empty batch")
    dx = kernels.pairwise_dist(x_hat)
    dz = kernels.pairwise_dist(z)
    b = x_hat.shape[0]
    return float(np.exp(-(dx * dz).sum() / (b * b)))


def diversity_grad(x_hat, z) -> np.ndarray:
    """Gradient of :func:`diversity_loss` wrt x_hat; coincident rows (zero
    distance, where the norm is not differentiable) contribute nothing."""
    x_hat = as_f64(x_hat)
    z = as_f64(z)
    dx = kernels.pairwise_dist(x_hat)
    dz = kernels.pairwise_dist(z)
    b = x_hat.shape[0]
    loss = np.exp(-(dx * dz).sum() / (b * b))
    safe = np.where(dx > 0, dx, 1.0)
    coef = np.where(dx > 0, dz / safe, 0.0)
    diff = x_hat[:, None, :] - x_hat[None, :, :]
    # d/dx_i of -sum_{i,j} dx_ij*dz_ij picks up each pair twice
    return (-2.0 * loss / (b * b)) * (coef[:, :, None] * diff).sum(axis=1)


def class_frequency(ens_logits) -> np.ndarray:
    """Mean over the batch of the plain-softmax rows (temperature 1)."""
    probs = kernels.softmax_rows(as_f64(ens_logits))
    return probs.mean(axis=0)


def info_entropy_loss(p) -> float:
    """Negative entropy sum p*ln p; minimized at the uniform distribution."""
    p = np.maximum(as_f64(p), PROB_FLOOR)
    return float((p * np.log(p)).sum())


def info_entropy_grad(ens_logits) -> np.ndarray:
    """Gradient of info_entropy_loss(class_frequency(logits)) wrt the logits."""
    s = kernels.softmax_rows(as_f64(ens_logits))
    p = np.maximum(s.mean(axis=0), PROB_FLOOR)
    gp = (np.log(p) + 1.0) / ens_logits.shape[0]
    return s * (gp[None, :] - (s * gp[None, :]).sum(axis=1, keepdims=True))


def generator_loss(parts: dict[str, float], w: LossWeights,
                   mask: dict[str, bool] | None = None) -> float:
    """Weighted masked sum fid + b1*adv + b2*div + b3*info."""
    mask = full_mask() if mask is None else mask
    unknown = set(parts) - set(GENERATOR_TERMS)
    if unknown:
        raise ShapeError(f"unknown generator loss terms: {sorted(unknown)}")
    betas = {"fid": 1.0, "adv": w.beta_adv, "div": w.beta_div, "info": w.beta_info}
    return sum(
        betas[t] * parts[t] for t in GENERATOR_TERMS if mask.get(t, True) and t in parts
    )


def local_distill_loss(ens_logits, local_logits, tau: float) -> float:
    return kl_div(softmax_t(ens_logits, tau), softmax_t(local_logits, tau))


def aux_distill_loss(ens_logits_on_xp, global_logits_on_xp, tau: float) -> float:
    return kl_div(softmax_t(ens_logits_on_xp, tau), softmax_t(global_logits_on_xp, tau))
