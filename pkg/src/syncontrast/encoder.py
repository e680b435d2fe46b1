"""Small MLP encoder with explicit forward and backward passes.

The encoder maps raw feature vectors to unit-norm embeddings: a stack of
affine layers with tanh on every hidden layer, a linear output layer, and
a final row-wise L2 normalization. The backward pass is exact for the
traced forward map, including the normalization Jacobian, and is verified
against central finite differences in the test suite.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, ZeroNormError
from .mathops import ZERO_NORM_EPS, as_f64


@dataclass
class EncoderParams:
    """Affine layer parameters; weights[i] has shape (in_i, out_i)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def checksum(self) -> int:
        """CRC of the raw parameter bytes; order-sensitive."""
        crc = 0
        for w, b in zip(self.weights, self.biases):
            crc = zlib.crc32(np.ascontiguousarray(w).tobytes(), crc)
            crc = zlib.crc32(np.ascontiguousarray(b).tobytes(), crc)
        return crc


@dataclass
class ForwardTrace:
    """Per-layer values cached by encoder_forward for the backward pass."""

    inputs: list[np.ndarray]    # input to each affine layer, (B, in_i)
    preacts: list[np.ndarray]   # affine outputs before nonlinearity, (B, out_i)
    norms: np.ndarray           # L2 norm of each pre-normalization output row, (B,)
    embeddings: np.ndarray      # normalized output rows, (B, d)


@dataclass
class Gradients:
    """Same shape tree as EncoderParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def add(self, other: "Gradients") -> "Gradients":
        return Gradients(
            weights=[a + b for a, b in zip(self.weights, other.weights)],
            biases=[a + b for a, b in zip(self.biases, other.biases)],
        )


def encoder_init(layer_dims, rng: np.random.Generator) -> EncoderParams:
    """Glorot-uniform weights, zero biases.

    Weight entries are drawn uniform in +/- sqrt(6 / (fan_in + fan_out)).
    Draw order: layers front to back, each weight matrix filled in row-major
    order, biases consume no draws.
    """
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise ShapeMismatchError(f"need >= 2 positive layer dims, got {layer_dims}")
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EncoderParams(weights=weights, biases=biases)


def encoder_forward(params: EncoderParams, batch) -> tuple[np.ndarray, ForwardTrace]:
    """Forward pass returning unit-norm embedding rows and a backprop trace.

    Hidden layers apply tanh; the output layer is linear and its rows are
    then L2-normalized, so the embedding always lives on the unit sphere.
    """
    batch = as_f64(batch)
    if batch.ndim != 2 or batch.shape[1] != params.in_dim:
        raise ShapeMismatchError(
            f"batch shape {batch.shape} incompatible with input dim {params.in_dim}"
        )
    n_layers = len(params.weights)
    inputs = []
    preacts = []
    h = batch
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        u = h @ w + b
        preacts.append(u)
        h = np.tanh(u) if i < n_layers - 1 else u
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms <= ZERO_NORM_EPS):
        bad = int(np.argmin(norms))
        raise ZeroNormError(f"degenerate pre-normalization output in row {bad}")
    z = h / norms[:, None]
    trace = ForwardTrace(inputs=inputs, preacts=preacts, norms=norms, embeddings=z)
    return z, trace


def encoder_embed(params: EncoderParams, batch) -> np.ndarray:
    """Forward pass without a trace, for target-encoder keys and evaluation."""
    z, _ = encoder_forward(params, batch)
    return z


def encoder_backward(
    params: EncoderParams, trace: ForwardTrace, grad_embeddings
) -> Gradients:
    """Exact gradients of the traced forward map.

    grad_embeddings is dLoss/dZ for the normalized output Z. The final
    normalization contributes (I - z z^T) / ||u|| per row, so upstream
    gradient components parallel to the output row vanish.
    """
    g = as_f64(grad_embeddings)
    z = trace.embeddings
    if g.shape != z.shape:
        raise ShapeMismatchError(f"upstream grad shape {g.shape} != output {z.shape}")
    n_layers = len(params.weights)
    # Through the row-wise normalization z = u / ||u||.
    radial = np.sum(g * z, axis=1, keepdims=True)
    delta = (g - radial * z) / trace.norms[:, None]
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        grad_w[i] = trace.inputs[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            upstream = delta @ params.weights[i].T
            # inputs[i] is tanh(preacts[i-1]), so tanh' = 1 - inputs[i]^2.
            delta = upstream * (1.0 - trace.inputs[i] ** 2)
    return Gradients(weights=grad_w, biases=grad_b)


def sgd_step(
    params: EncoderParams, grads: Gradients, lr: float, weight_decay: float = 0.0
) -> EncoderParams:
    """One plain SGD update: theta <- theta - lr * (g + weight_decay * theta)."""
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    if weight_decay < 0:
        raise ValueError(f"weight_decay must be >= 0, got {weight_decay}")
    if len(grads.weights) != len(params.weights):
        raise ShapeMismatchError("gradient tree does not match parameter tree")
    new_w = []
    new_b = []
    for w, b, gw, gb in zip(params.weights, params.biases, grads.weights, grads.biases):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise ShapeMismatchError("gradient tree does not match parameter tree")
        new_w.append(w - lr * (gw + weight_decay * w))
        new_b.append(b - lr * (gb + weight_decay * b))
    return EncoderParams(weights=new_w, biases=new_b)
