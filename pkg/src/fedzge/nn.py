"""Minimal dense-tensor neural network core.

Values are plain C-contiguous float64 numpy arrays. A :class:`Network` owns a
single flat parameter vector; each layer sees its slice through views, so an
in-place optimizer step updates the whole model at once. Reverse-mode
gradients are exact and rely on activations cached by the preceding forward
pass.

Labels are 1-based class indices everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import NonFiniteError, ShapeError

PROB_FLOOR = 1e-12


def as_f64(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def as_ids(labels) -> np.ndarray:
    return np.ascontiguousarray(labels, dtype=np.int64)


def finite_check(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values produced by {what}")
    return arr


# ---------------------------------------------------------------------------
# losses on logits / probabilities
# ---------------------------------------------------------------------------

def softmax_t(logits, tau: float) -> np.ndarray:
    """Row-wise softmax with temperature, computed with max subtraction."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    logits = as_f64(logits)
    out = kernels.softmax_rows(as_f64(logits / tau))
    return finite_check(out, "softmax_t")


def onehot(labels, num_classes: int) -> np.ndarray:
    ids = as_ids(labels)
    _check_labels(ids, num_classes)
    out = np.zeros((ids.shape[0], num_classes))
    out[np.arange(ids.shape[0]), ids - 1] = 1.0
    return out


def _check_labels(ids: np.ndarray, num_classes: int) -> None:
    if ids.size and (ids.min() < 1 or ids.max() > num_classes):
        raise ShapeError(
            f"labels must lie in [1..{num_classes}], "
            f"got range [{ids.min()}..{ids.max()}]"
        )


def cross_entropy(logits, labels) -> float:
    """Mean over the batch of -log softmax(logits)[label]."""
    logits = as_f64(logits)
    ids = as_ids(labels)
    if logits.ndim != 2 or ids.shape != (logits.shape[0],):
        raise ShapeError(
            f"logits (B,C) and labels (B,) expected, got {logits.shape} and {ids.shape}"
        )
    _check_labels(ids, logits.shape[1])
    probs = kernels.softmax_rows(logits)
    picked = probs[np.arange(logits.shape[0]), ids - 1]
    loss = float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))
    finite_check(np.asarray(loss), "cross_entropy")
    return loss


def cross_entropy_grad(logits, labels) -> np.ndarray:
    """Gradient of :func:`cross_entropy` with respect to the logits."""
    logits = as_f64(logits)
    ids = as_ids(labels)
    _check_labels(ids, logits.shape[1])
    g = kernels.softmax_rows(logits)
    g[np.arange(logits.shape[0]), ids - 1] -= 1.0
    return g / logits.shape[0]


def kl_div(p, q) -> float:
    """Mean over rows of sum p*log(p/q); entries floored at 1e-12."""
    p = as_f64(p)
    q = as_f64(q)
    if p.shape != q.shape:
        raise ShapeError(f"p and q must have equal shapes, got {p.shape} vs {q.shape}")
    pf = np.maximum(p, PROB_FLOOR)
    qf = np.maximum(q, PROB_FLOOR)
    loss = float(np.mean((pf * (np.log(pf) - np.log(qf))).sum(axis=1)))
    finite_check(np.asarray(loss), "kl_div")
    return loss


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

class Layer:
    """One step of a sequential network; parameters are views into the owner's
    flat vector, bound by :meth:`bind`."""

    def param_count(self) -> int:
        return 0

    def bind(self, params: np.ndarray) -> None:
        pass

    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray, gparams: np.ndarray) -> np.ndarray:
        """Return grad wrt the layer input; write param grads into gparams."""
        raise NotImplementedError

    def out_dim(self, in_dim: int) -> int:
        return in_dim


class Dense(Layer):
    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = in_dim
        self.o_dim = out_dim
        self._x = None

    def param_count(self) -> int:
        return self.in_dim * self.o_dim + self.o_dim

    def bind(self, params: np.ndarray) -> None:
        n = self.in_dim * self.o_dim
        self.w = params[:n].reshape(self.in_dim, self.o_dim)
        self.b = params[n:]

    def init_params(self, rng: np.random.Generator) -> None:
        bound = 1.0 / np.sqrt(self.in_dim)
        self.w[...] = rng.uniform(-bound, bound, size=self.w.shape)
        self.b[...] = rng.uniform(-bound, bound, size=self.b.shape)

    def forward(self, x, train):
        if x.shape[1] != self.in_dim:
            raise ShapeError(f"dense layer expects input width {self.in_dim}, got {x.shape[1]}")
        self._x = x
        return kernels.dense_forward(x, self.w, self.b)

    def backward(self, gy, gparams):
        gx, gw, gb = kernels.dense_backward(self._x, self.w, gy)
        n = self.in_dim * self.o_dim
        gparams[:n] = gw.ravel()
        gparams[n:] = gb
        return gx

    def out_dim(self, in_dim):
        return self.o_dim


class Activation(Layer):
    KINDS = ("tanh", "relu", "leaky_relu")

    def __init__(self, kind: str, slope: float = 0.2):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}")
        self.kind = kind
        # relu is leaky_relu with zero slope
        self.slope = 0.0 if kind == "relu" else slope
        self._cache = None

    def forward(self, x, train):
        if self.kind == "tanh":
            y = kernels.tanh_forward(x)
            self._cache = y
            return y
        self._cache = x
        return kernels.leaky_relu_forward(x, self.slope)

    def backward(self, gy, gparams):
        if self.kind == "tanh":
            return kernels.tanh_backward(self._cache, gy)
        return kernels.leaky_relu_backward(self._cache, self.slope, gy)


class BatchNorm1d(Layer):
    """Per-feature normalization; batch statistics in train mode, running
    averages (momentum 0.9) in eval mode."""

    def __init__(self, dim: int, momentum: float = 0.9, eps: float = 1e-5):
        self.dim = dim
        self.momentum = momentum
        self.eps = eps
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self._train_cache = None

    def param_count(self) -> int:
        return 2 * self.dim

    def bind(self, params):
        self.gamma = params[: self.dim]
        self.beta = params[self.dim:]

    def init_params(self, rng):
        self.gamma[...] = 1.0
        self.beta[...] = 0.0

    def forward(self, x, train):
        if x.shape[1] != self.dim:
            raise ShapeError(f"batch-norm expects width {self.dim}, got {x.shape[1]}")
        if train:
            y, mean, var, xhat = kernels.batchnorm_train_forward(
                x, as_f64(self.gamma), as_f64(self.beta), self.eps
            )
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
            self._train_cache = (xhat, var)
            return y
        self._train_cache = None
        return kernels.batchnorm_eval_forward(
            x, as_f64(self.gamma), as_f64(self.beta),
            as_f64(self.running_mean), as_f64(self.running_var), self.eps,
        )

    def backward(self, gy, gparams):
        if self._train_cache is None:
            raise ShapeError("batch-norm backward requires a preceding train-mode forward")
        xhat, var = self._train_cache
        gx, ggamma, gbeta = kernels.batchnorm_backward(
            xhat, var, as_f64(self.gamma), gy, self.eps
        )
        gparams[: self.dim] = ggamma
        gparams[self.dim:] = gbeta
        return gx


class EmbedConcat(Layer):
    """Label-conditioning head: looks up a trainable embedding row per label
    and concatenates it to the incoming noise batch."""

    def __init__(self, num_classes: int, embed_dim: int):
        self.num_classes = num_classes
        self.embed_dim = embed_dim
        self._ids0 = None

    def param_count(self) -> int:
        return self.num_classes * self.embed_dim

    def bind(self, params):
        self.table = params.reshape(self.num_classes, self.embed_dim)

    def init_params(self, rng):
        self.table[...] = rng.standard_normal(self.table.shape)

    def forward(self, x, train, labels=None):
        if labels is None:
            raise ShapeError("embedding layer requires labels")
        ids = as_ids(labels)
        _check_labels(ids, self.num_classes)
        if ids.shape[0] != x.shape[0]:
            raise ShapeError(
                f"labels ({ids.shape[0]}) and batch ({x.shape[0]}) sizes differ"
            )
        self._ids0 = ids - 1
        emb = kernels.embedding_forward(as_f64(self.table), self._ids0)
        return np.concatenate([x, emb], axis=1)

    def backward(self, gy, gparams):
        nz = gy.shape[1] - self.embed_dim
        gtable = kernels.embedding_backward(
            self._ids0, self.num_classes, as_f64(gy[:, nz:])
        )
        gparams[...] = gtable.ravel()
        return as_f64(gy[:, :nz])

    def out_dim(self, in_dim):
        return in_dim + self.embed_dim


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

class Network:
    """Ordered layers over one flat parameter vector.

    Train-mode forward/backward mutate caches and batch-norm state, so a
    single instance must not be used from several threads at once; distinct
    instances are independent.
    """

    def __init__(self, layers: list[Layer], rng: np.random.Generator):
        self.layers = layers
        self.training = True
        counts = [l.param_count() for l in layers]
        self.params = np.zeros(int(np.sum(counts, dtype=np.int64)))
        self._offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        for layer, a, b in zip(layers, self._offsets[:-1], self._offsets[1:]):
            layer.bind(self.params[a:b])
            layer.init_params(rng)
        self._out_shape = None

    @property
    def num_params(self) -> int:
        return self.params.size

    def train(self) -> None:
        self.training = True

    def eval(self) -> None:
        self.training = False

    def get_params(self) -> np.ndarray:
        return self.params.copy()

    def set_params(self, vec: np.ndarray) -> None:
        vec = as_f64(vec)
        if vec.shape != self.params.shape:
            raise ShapeError(
                f"parameter vector of length {self.params.size} expected, got {vec.size}"
            )
        self.params[...] = vec

    def forward(self, x, labels=None, train: bool | None = None) -> np.ndarray:
        """Run the layer stack; activations are cached for backward."""
        train = self.training if train is None else train
        h = as_f64(x)
        if h.ndim != 2:
            raise ShapeError(f"batch must be 2-d (B, features), got shape {h.shape}")
        finite_check(h, "forward input")
        for layer in self.layers:
            if isinstance(layer, EmbedConcat):
                h = layer.forward(h, train, labels=labels)
            else:
                h = layer.forward(h, train)
        self._out_shape = h.shape
        return finite_check(h, "forward")

    def backward(self, upstream) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of <upstream, output> wrt parameters and input."""
        if self._out_shape is None:
            raise ShapeError("backward requires a preceding forward pass")
        gy = as_f64(upstream)
        if gy.shape != self._out_shape:
            raise ShapeError(
                f"upstream shape {gy.shape} does not match forward output {self._out_shape}"
            )
        grads = np.zeros_like(self.params)
        for layer, a, b in zip(
            reversed(self.layers), self._offsets[-2::-1], self._offsets[:0:-1]
        ):
            gy = layer.backward(gy, grads[a:b])
        finite_check(grads, "backward")
        return grads, finite_check(gy, "backward")


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, lr: float) -> np.ndarray:
    """One in-place Adam update with bias correction; returns ``params``.

    lr=0 advances the moment buffers but leaves the parameters unchanged.
    """
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeError(
            f"params/grads/state lengths differ: {params.size}, {grads.size}, {state.m.size}"
        )
    state.t += 1
    kernels.adam_update(
        params, as_f64(grads), state.m, state.v,
        state.t, lr, state.beta1, state.beta2, state.eps,
    )
    return finite_check(params, "adam_step")
