"""Scikit-learn estimator wrappers around the contrastive engine.

ContrastiveEncoder is a TransformerMixin: fit() pretrains the encoder on
raw feature rows with the full pipeline (momentum queue, hard-negative
mining, synthetic negatives), transform() maps rows to unit-norm
embeddings. LinearProbe is the matching frozen-representation classifier.
Both compose with sklearn pipelines, grid search, and clone().
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .config import TrainConfig
from .data import AugmentationParams, Dataset, MixConfig
from .encoder import encoder_embed
from .probe import evaluate, fit_linear
from .synthesis import STRATEGIES, SynthesisConfig
from .training import pretrain


class ContrastiveEncoder(TransformerMixin, BaseEstimator):
    """Self-supervised embedding transformer trained with synthetic hard negatives.

    Parameters mirror the training config; `hidden_dims` plus
    `embedding_dim` fix the MLP shape, the input width is inferred from X
    at fit time. `y` is ignored: training is label-free.
    """

    def __init__(
        self,
        embedding_dim=64,
        hidden_dims=(256, 128),
        epochs=20,
        batch_size=32,
        lr=0.3,
        weight_decay=0.0,
        momentum=0.99,
        queue_capacity=1024,
        temperature=0.2,
        strategies=STRATEGIES,
        n_hardest=128,
        n_synthetic=114,
        noise_sigma=0.5,
        scale_range=(0.8, 1.2),
        mask_fraction=0.1,
        real_fraction=1.0,
        random_state=0,
    ):
        self.embedding_dim = embedding_dim
        self.hidden_dims = hidden_dims
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.momentum = momentum
        self.queue_capacity = queue_capacity
        self.temperature = temperature
        self.strategies = strategies
        self.n_hardest = n_hardest
        self.n_synthetic = n_synthetic
        self.noise_sigma = noise_sigma
        self.scale_range = scale_range
        self.mask_fraction = mask_fraction
        self.real_fraction = real_fraction
        self.random_state = random_state

    def _config(self, n_features: int) -> TrainConfig:
        return TrainConfig(
            seed=self.random_state,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            weight_decay=self.weight_decay,
            momentum=self.momentum,
            queue_capacity=self.queue_capacity,
            temperature=self.temperature,
            encoder_dims=(n_features, *self.hidden_dims, self.embedding_dim),
            mix=MixConfig(real_fraction=self.real_fraction),
            augmentation=AugmentationParams(
                noise_sigma=self.noise_sigma,
                scale_range=tuple(self.scale_range),
                mask_fraction=self.mask_fraction,
            ),
            synthesis=SynthesisConfig(
                strategies=tuple(self.strategies),
                n_hardest=self.n_hardest,
                n_synthetic=self.n_synthetic,
            ),
        )

    def fit(self, X, y=None, X_synthetic=None):
        """Pretrain on X; X_synthetic optionally feeds the data mix."""
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < self.batch_size:
            raise ValueError(
                f"need at least batch_size={self.batch_size} rows, got {X.shape[0]}"
            )
        real = Dataset(
            features=X, labels=np.full(X.shape[0], -1), origin="real", n_classes=1
        )
        synthetic = None
        if X_synthetic is not None:
            X_synthetic = check_array(X_synthetic, dtype=np.float64)
            synthetic = Dataset(
                features=X_synthetic,
                labels=np.full(X_synthetic.shape[0], -1),
                origin="synthetic",
                n_classes=1,
            )
        result = pretrain(self._config(X.shape[1]), real=real, synthetic=synthetic)
        self.params_ = result.state.pair.online
        self.n_features_in_ = X.shape[1]
        self.history_ = list(result.state.metrics.records)
        self.final_loss_ = result.final_loss
        return self

    def transform(self, X) -> np.ndarray:
        """Unit-norm embeddings of shape (n_samples, embedding_dim)."""
        if not hasattr(self, "params_"):
            raise NotFittedError("ContrastiveEncoder is not fitted yet")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, fit saw {self.n_features_in_}"
            )
        return encoder_embed(self.params_, X)


class LinearProbe(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression by full-batch gradient descent.

    Deterministic (zero init), intended for probing frozen embeddings but
    usable on any feature matrix.
    """

    def __init__(self, lr=0.5, steps=1000):
        self.lr = lr
        self.steps = steps

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        fit = fit_linear(X, encoded, len(self.classes_), lr=self.lr, steps=self.steps)
        self.weights_ = fit.weights
        self.bias_ = fit.bias
        self.train_losses_ = fit.train_losses
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError("LinearProbe is not fitted yet")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        return X @ self.weights_.T + self.bias_

    def predict_proba(self, X) -> np.ndarray:
        logits = self.decision_function(X)
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def top_k_accuracy(self, X, y, k: int = 5) -> float:
        """Fraction of rows whose label is among the k largest logits."""
        self._check_fitted()
        encoded = np.searchsorted(self.classes_, np.asarray(y))
        result = evaluate(self.weights_, self.bias_, check_array(X, dtype=np.float64), encoded)
        if k == 1:
            return result.top1
        if k == 5:
            return result.top5
        logits = self.decision_function(X)
        order = np.argsort(-logits, axis=1, kind="stable")[:, : min(k, len(self.classes_))]
        return float(np.mean(np.any(order == encoded[:, None], axis=1)))
