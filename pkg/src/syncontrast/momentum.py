"""Online/target encoder pair with EMA updates, and the FIFO negative queue."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import EncoderParams
from .errors import (
    EmptyQueueError,
    NotNormalizedError,
    ShapeMismatchError,
)
from .mathops import as_f64

UNIT_NORM_TOL = 1e-6


@dataclass
class EncoderPair:
    """Gradient-trained online encoder plus its EMA-tracked target copy."""

    online: EncoderParams
    target: EncoderParams
    momentum: float

    def __post_init__(self):
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError(f"momentum must be in [0, 1], got {self.momentum}")


def make_pair(online: EncoderParams, momentum: float) -> EncoderPair:
    """Pair a fresh encoder with a target initialized as an exact copy."""
    return EncoderPair(online=online, target=online.copy(), momentum=momentum)


def ema_update(pair: EncoderPair) -> EncoderPair:
    """target <- m * target + (1 - m) * online, elementwise."""
    m = pair.momentum
    new_w = []
    new_b = []
    for wt, bt, wo, bo in zip(
        pair.target.weights, pair.target.biases, pair.online.weights, pair.online.biases
    ):
        if wt.shape != wo.shape or bt.shape != bo.shape:
            raise ShapeMismatchError("online and target parameter trees must match")
        new_w.append(m * wt + (1.0 - m) * wo)
        new_b.append(m * bt + (1.0 - m) * bo)
    return EncoderPair(
        online=pair.online,
        target=EncoderParams(weights=new_w, biases=new_b),
        momentum=m,
    )


class NegativeQueue:
    """Fixed-capacity FIFO ring buffer of unit-norm key embeddings.

    Single-owner mutable state: enqueue mutates in place, snapshot returns
    an independent copy. Entries are stored oldest-first logically; the
    physical layout is a ring indexed by a write head.
    """

    def __init__(self, capacity: int, dim: int):
        if capacity < 1 or dim < 1:
            raise ValueError(f"capacity and dim must be positive, got {capacity}, {dim}")
        self.capacity = int(capacity)
        self.dim = int(dim)
        self.buffer = np.zeros((self.capacity, self.dim))
        self.head = 0  # next write position
        self.fill = 0

    def __len__(self) -> int:
        return self.fill

    def enqueue(self, keys) -> None:
        """Append key rows in batch order, evicting the oldest entries when full."""
        keys = as_f64(keys)
        if keys.ndim != 2 or keys.shape[1] != self.dim:
            raise ShapeMismatchError(
                f"keys shape {keys.shape} incompatible with queue dim {self.dim}"
            )
        n = keys.shape[0]
        if n > self.capacity:
            raise ShapeMismatchError(
                f"batch of {n} exceeds queue capacity {self.capacity}"
            )
        norms = np.linalg.norm(keys, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise NotNormalizedError(f"key row {bad} has norm {norms[bad]!r}")
        idx = (self.head + np.arange(n)) % self.capacity
        self.buffer[idx] = keys
        self.head = int((self.head + n) % self.capacity)
        self.fill = min(self.fill + n, self.capacity)

    def snapshot(self) -> np.ndarray:
        """Copy of the live entries as a (fill, dim) matrix, oldest entry first."""
        if self.fill == 0:
            raise EmptyQueueError("queue is empty")
        start = (self.head - self.fill) % self.capacity
        idx = (start + np.arange(self.fill)) % self.capacity
        return self.buffer[idx].copy()
