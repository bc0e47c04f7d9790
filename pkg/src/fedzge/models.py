"""Builders for desk-scale MLP classifiers and the label-conditioned generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .nn import Activation, BatchNorm1d, Dense, EmbedConcat, Network
from .seeding import derive_rng

DEFAULT_NOISE_DIM = 16


@dataclass(frozen=True)
class ClassifierSpec:
    input_dim: int
    hidden: tuple[int, ...]
    num_classes: int
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if len(self.hidden) < 1:
            raise ConfigError("classifier needs at least one hidden layer")
        if self.input_dim < 1 or self.num_classes < 2:
            raise ConfigError(
                f"bad classifier dims: input_dim={self.input_dim}, num_classes={self.num_classes}"
            )


@dataclass(frozen=True)
class GeneratorSpec:
    noise_dim: int
    num_classes: int
    hidden: tuple[int, ...]
    output_dim: int
    embed_dim: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        embed = self.noise_dim if self.embed_dim is None else self.embed_dim
        object.__setattr__(self, "embed_dim", embed)
        if embed != self.noise_dim:
            raise ConfigError(
                f"embed_dim must equal noise_dim ({self.noise_dim}), got {embed}"
            )
        if len(self.hidden) < 1:
            raise ConfigError("generator needs at least one hidden layer")
        if self.noise_dim < 1 or self.output_dim < 1 or self.num_classes < 2:
            raise ConfigError("bad generator dims")


def build_classifier(spec: ClassifierSpec, seed: int) -> Network:
    """Dense/activation stack ending in an unconstrained C-wide logit layer."""
    layers = []
    width = spec.input_dim
    for h in spec.hidden:
        layers.append(Dense(width, h))
        layers.append(Activation(spec.activation))
        width = h
    layers.append(Dense(width, spec.num_classes))
    return Network(layers, derive_rng(seed, "classifier"))


def build_generator(spec: GeneratorSpec, seed: int) -> Network:
    """Embedding -> concat -> (dense, batch-norm, leaky-relu)* -> dense -> tanh."""
    layers: list = [EmbedConcat(spec.num_classes, spec.embed_dim)]
    width = spec.noise_dim + spec.embed_dim
    for h in spec.hidden:
        layers.append(Dense(width, h))
        layers.append(BatchNorm1d(h))
        layers.append(Activation("leaky_relu", slope=0.2))
        width = h
    layers.append(Dense(width, spec.output_dim))
    layers.append(Activation("tanh"))
    return Network(layers, derive_rng(seed, "generator"))


def generate(G: Network, batch: int, num_classes: int, noise_dim: int, seed: int):
    """Draw (z, labels) from the given seed and return (z, labels, G(z, labels)).

    z is standard normal, labels are uniform on [1..num_classes]; the forward
    pass runs in G's current train/eval mode.
    """
    if batch < 1:
        raise ConfigError(f"batch must be >= 1, got {batch}")
    rng = derive_rng(seed, "generate")
    z = rng.standard_normal((batch, noise_dim))
    labels = rng.integers(1, num_classes + 1, size=batch, dtype=np.int64)
    x_hat = G.forward(z, labels=labels)
    return z, labels, x_hat
