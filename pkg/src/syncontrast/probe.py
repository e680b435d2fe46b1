"""Linear probing: freeze the encoder, fit a softmax classifier, report top-k accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .encoder import EncoderParams, encoder_embed
from .errors import BadLabelsError, ShapeMismatchError, UnlabeledError
from .mathops import as_f64, softmax_rows


@dataclass
class ProbeResult:
    top1: float
    top5: float
    n_eval: int
    train_loss_final: float


@dataclass
class LinearProbeFit:
    """Fitted linear classifier: weights (n_classes, d) and bias (n_classes,)."""

    weights: np.ndarray
    bias: np.ndarray
    train_losses: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.train_losses[-1] if self.train_losses else math.nan


def embed_dataset(
    params: EncoderParams, dataset: Dataset, batch_size: int = 512
) -> tuple[np.ndarray, np.ndarray]:
    """Embed every sample with the frozen encoder; rows are unit norm.

    Pure: the parameters are never mutated.
    """
    if not dataset.fully_labeled:
        raise UnlabeledError("probing requires a fully labeled dataset")
    chunks = [
        encoder_embed(params, dataset.features[i : i + batch_size])
        for i in range(0, len(dataset), batch_size)
    ]
    return np.concatenate(chunks, axis=0), dataset.labels.copy()


def cross_entropy(weights, bias, emb, labels) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy and its gradients w.r.t. weights and bias."""
    logits = emb @ weights.T + bias
    probs = softmax_rows(logits)
    n = emb.shape[0]
    loss = float(-np.mean(np.log(probs[np.arange(n), labels])))
    probs[np.arange(n), labels] -= 1.0
    probs /= n
    return loss, probs.T @ emb, probs.sum(axis=0)


def fit_linear(
    train_emb,
    train_labels,
    n_classes: int,
    lr: float = 0.5,
    steps: int = 1000,
    rng=None,
) -> LinearProbeFit:
    """Multinomial logistic regression by full-batch gradient descent.

    Weights start at zero, so the fit is deterministic; rng is accepted for
    interface parity and unused. The recorded loss history is non-increasing
    for any lr below the curvature bound (0.5 is safe for unit-norm rows).
    """
    emb = as_f64(train_emb)
    labels = np.asarray(train_labels, dtype=np.int64)
    if emb.ndim != 2 or labels.shape != (emb.shape[0],):
        raise ShapeMismatchError("embeddings and labels must align")
    if labels.min(initial=0) < 0 or (labels.size and int(labels.max()) >= n_classes):
        raise BadLabelsError(f"labels must lie in [0, {n_classes})")
    weights = np.zeros((n_classes, emb.shape[1]))
    bias = np.zeros(n_classes)
    losses = []
    for _ in range(steps):
        loss, grad_w, grad_b = cross_entropy(weights, bias, emb, labels)
        losses.append(loss)
        weights -= lr * grad_w
        bias -= lr * grad_b
    return LinearProbeFit(weights=weights, bias=bias, train_losses=losses)


def evaluate(weights, bias, eval_emb, eval_labels, train_loss_final: float = math.nan) -> ProbeResult:
    """Top-1 and top-5 accuracy; argmax ties resolve to the smallest class index.

    With fewer than 5 classes, top5 degrades to min(5, n_classes)-accuracy.
    """
    weights = as_f64(weights)
    bias = as_f64(bias)
    emb = as_f64(eval_emb)
    labels = np.asarray(eval_labels, dtype=np.int64)
    if emb.ndim != 2 or emb.shape[1] != weights.shape[1] or bias.shape != (weights.shape[0],):
        raise ShapeMismatchError("weights, bias, and embeddings must be shape-congruent")
    if labels.shape != (emb.shape[0],):
        raise ShapeMismatchError("labels must align with embedding rows")
    n_classes = weights.shape[0]
    logits = emb @ weights.T + bias
    pred = np.argmax(logits, axis=1)  # first maximum = smallest class index
    top1 = float(np.mean(pred == labels))
    m = min(5, n_classes)
    # Stable sort of negated logits: descending by logit, smallest index on ties.
    order = np.argsort(-logits, axis=1, kind="stable")[:, :m]
    top5 = float(np.mean(np.any(order == labels[:, None], axis=1)))
    return ProbeResult(
        top1=top1, top5=top5, n_eval=int(emb.shape[0]), train_loss_final=train_loss_final
    )
