"""Byte-exact communication accounting.

Every payload is counted as elementCount x 4 bytes (32-bit values; labels as
32-bit integers). Totals convert to GiB (2**30 bytes) because that is the
convention under which the published overhead figures reproduce exactly.
A live append-only ledger records what a simulated run actually moved, and
closed-form per-method formulas predict the same totals for cross-checking.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, ShapeError

# torchvision-style ResNet-18 with a 10-class head
RESNET18_PARAMS = 11_181_642

DOWN = "down"
UP = "up"

KIND_SYNTHETIC = "synthetic_batch"
KIND_PERTURBED = "perturbed_batch"
KIND_LOCAL_LOGITS = "local_logits"
KIND_ENSEMBLE = "ensemble_logits"
KIND_GLOBAL_LOGITS = "global_logits"
KIND_PARAMS = "parameters"
KIND_AUX_DATA = "aux_data"
KIND_AUX_LABELS = "aux_labels"

METHODS = (
    "fedzge", "fedavg", "mhat", "dsfl",
    "fedgen", "fedftg", "dfrd", "fedzkt", "whitebox_datafree",
)


@dataclass(frozen=True)
class PayloadShape:
    element_count: int
    bytes_per_element: int = 4

    def __post_init__(self):
        if self.element_count < 0 or self.bytes_per_element < 0:
            raise ShapeError(
                f"payload shape must be non-negative, got {self.element_count} x "
                f"{self.bytes_per_element}"
            )

    @property
    def bytes(self) -> int:
        return self.element_count * self.bytes_per_element


class LedgerEntry(NamedTuple):
    round: int
    client: int
    direction: str
    kind: str
    bytes: int


class CommLedger:
    """Append-only payload record; appends are lock-serialized."""

    def __init__(self):
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()

    def record(self, round_idx: int, client: int, direction: str, kind: str,
               shape: PayloadShape) -> None:
        if direction not in (DOWN, UP):
            raise ConfigError(f"direction must be 'down' or 'up', got {direction!r}")
        entry = LedgerEntry(round_idx, client, direction, kind, shape.bytes)
        with self._lock:
            self._entries.append(entry)

    def entries(self) -> tuple[LedgerEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def total_bytes(self, direction: str | None = None, round_idx: int | None = None,
                    kind: str | None = None) -> int:
        return sum(
            e.bytes for e in self.entries()
            if (direction is None or e.direction == direction)
            and (round_idx is None or e.round == round_idx)
            and (kind is None or e.kind == kind)
        )

    def kinds(self) -> set[str]:
        return {e.kind for e in self.entries()}

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "client", "direction", "kind", "bytes"])
            for e in self.entries():
                writer.writerow([e.round, e.client, e.direction, e.kind, e.bytes])


def to_gib(byte_count: int) -> float:
    """Bytes to GiB at two decimals (the published tables' convention)."""
    return round(byte_count / 2**30, 2)


@dataclass(frozen=True)
class MethodCommSpec:
    """Closed-form per-run inputs for one method's down/up byte formulas.

    Shape fields that a method's formula does not use may stay None; a used
    but missing shape is an error at evaluation time.
    """

    method: str
    rounds: int
    clients: int
    q: int = 0
    synthetic: PayloadShape | None = None
    logits: PayloadShape | None = None
    aux_data: PayloadShape | None = None
    aux_labels: PayloadShape | None = None
    params_global: PayloadShape | None = None
    params_local: PayloadShape | None = None
    params_generator: PayloadShape | None = None
    label_stats: PayloadShape | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.rounds < 0 or self.clients < 0:
            raise ConfigError("rounds and clients must be non-negative")


def _need(spec: MethodCommSpec, name: str) -> int:
    shape = getattr(spec, name)
    if shape is None:
        raise ConfigError(f"method {spec.method!r} needs payload shape {name!r}")
    return shape.bytes


def formula_bytes(spec: MethodCommSpec) -> tuple[int, int]:
    """(downlink, uplink) byte totals for a whole run of T rounds."""
    tk = spec.rounds * spec.clients
    m = spec.method
    if m == "fedzge":
        if spec.q < 1:
            raise ConfigError("fedzge formula needs q >= 1")
        down = tk * (_need(spec, "synthetic") * (1 + spec.q) + _need(spec, "logits"))
        up = tk * (_need(spec, "logits") * (1 + spec.q))
    elif m == "whitebox_datafree":
        down = tk * (_need(spec, "synthetic") + _need(spec, "logits"))
        up = tk * (_need(spec, "logits") + _need(spec, "params_local"))
    elif m == "mhat":
        down = tk * (_need(spec, "aux_data") + _need(spec, "aux_labels") + _need(spec, "logits"))
        up = tk * _need(spec, "logits")
    elif m == "dsfl":
        down = tk * (_need(spec, "aux_data") + _need(spec, "logits"))
        up = tk * _need(spec, "logits")
    elif m == "fedavg":
        down = tk * _need(spec, "params_global")
        up = tk * _need(spec, "params_local")
    elif m == "fedgen":
        down = tk * (_need(spec, "params_global") + _need(spec, "params_generator"))
        up = tk * (_need(spec, "params_local") + _need(spec, "label_stats"))
    elif m in ("fedftg", "dfrd"):
        down = tk * _need(spec, "params_global")
        up = tk * (_need(spec, "params_local") + _need(spec, "label_stats"))
    elif m == "fedzkt":
        down = tk * _need(spec, "params_local")
        up = tk * _need(spec, "params_local")
    else:
        raise ConfigError(f"no formula for method {m!r}")
    return down, up


# -- convenience builders -----------------------------------------------------

def fedzge_comm_spec(rounds: int, clients: int, batch: int, dim: int,
                     num_classes: int, q: int) -> MethodCommSpec:
    return MethodCommSpec(
        method="fedzge", rounds=rounds, clients=clients, q=q,
        synthetic=PayloadShape(batch * dim),
        logits=PayloadShape(batch * num_classes),
    )


def whitebox_comm_spec(rounds: int, clients: int, batch: int, dim: int,
                       num_classes: int, local_params: int) -> MethodCommSpec:
    return MethodCommSpec(
        method="whitebox_datafree", rounds=rounds, clients=clients,
        synthetic=PayloadShape(batch * dim),
        logits=PayloadShape(batch * num_classes),
        params_local=PayloadShape(local_params),
    )


def distill_comm_spec(method: str, rounds: int, clients: int, aux_batch: int,
                      dim: int, num_classes: int) -> MethodCommSpec:
    if method not in ("mhat", "dsfl"):
        raise ConfigError(f"expected mhat or dsfl, got {method!r}")
    return MethodCommSpec(
        method=method, rounds=rounds, clients=clients,
        aux_data=PayloadShape(aux_batch * dim),
        aux_labels=PayloadShape(aux_batch),
        logits=PayloadShape(aux_batch * num_classes),
    )


def param_comm_spec(method: str, rounds: int, clients: int, global_params: int,
                    local_params: int | None = None,
                    generator_params: int | None = None,
                    num_classes: int | None = None) -> MethodCommSpec:
    if method not in ("fedavg", "fedgen", "fedftg", "dfrd", "fedzkt"):
        raise ConfigError(f"expected a parameter-exchange method, got {method!r}")
    local = global_params if local_params is None else local_params
    return MethodCommSpec(
        method=method, rounds=rounds, clients=clients,
        params_global=PayloadShape(global_params),
        params_local=PayloadShape(local),
        params_generator=None if generator_params is None else PayloadShape(generator_params),
        label_stats=None if num_classes is None else PayloadShape(num_classes),
    )
