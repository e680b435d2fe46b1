"""Dense vector math, top-k selection, and seeded randomness.

Everything here is deterministic and pure. Stochastic helpers take an
explicit ``numpy.random.Generator``; a generator instance must be owned by
a single caller and draws must happen in a documented order for runs to be
reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import BadRangeError, KTooLargeError, ShapeMismatchError, ZeroNormError

ZERO_NORM_EPS = 1e-12


def as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def l2_normalize(v) -> np.ndarray:
    """Scale a vector to unit L2 norm, preserving direction."""
    v = as_f64(v)
    norm = float(np.linalg.norm(v))
    if norm <= ZERO_NORM_EPS:
        raise ZeroNormError(f"cannot normalize vector with norm {norm!r}")
    return v / norm


def l2_normalize_rows(m) -> np.ndarray:
    """Row-wise unit normalization of a 2-D array."""
    m = as_f64(m)
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms <= ZERO_NORM_EPS):
        bad = int(np.argmin(norms))
        raise ZeroNormError(f"row {bad} has norm {norms[bad]!r}")
    return m / norms[:, None]


def cosine_sim(a, b) -> float:
    """Cosine similarity of two vectors, in [-1, 1]."""
    a = as_f64(a)
    b = as_f64(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"length mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= ZERO_NORM_EPS or nb <= ZERO_NORM_EPS:
        raise ZeroNormError("cosine similarity undefined for zero vectors")
    # Clamp: rounding can push |sim| a hair past 1 for near-parallel inputs.
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def top_k_indices(scores, k: int) -> np.ndarray:
    """Indices of the k largest scores, descending, ties broken by lower index."""
    scores = as_f64(scores)
    if scores.ndim != 1:
        raise ShapeMismatchError("scores must be 1-D")
    if k > scores.shape[0]:
        raise KTooLargeError(f"k={k} exceeds {scores.shape[0]} candidates")
    if k < 0:
        raise KTooLargeError("k must be non-negative")
    # Stable sort of the negated scores: descending by score, ascending by index on ties.
    order = np.argsort(-scores, kind="stable")
    return order[:k]


def stable_softmax(logits) -> np.ndarray:
    """Softmax computed with a max shift so large logits cannot overflow."""
    logits = as_f64(logits)
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / np.sum(e)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax of a 2-D array."""
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def logsumexp_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of a 2-D array, shift-protected."""
    m = np.max(logits, axis=1)
    return m + np.log(np.sum(np.exp(logits - m[:, None]), axis=1))


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; identical seeds yield identical streams."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def rng_state(rng: np.random.Generator) -> dict:
    """Snapshot of the generator state, JSON-serializable."""
    return rng.bit_generator.state


def restore_rng(state: dict) -> np.random.Generator:
    """Rebuild a generator from a state snapshot taken with rng_state."""
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = state
    return rng


def rng_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    """One uniform draw from [lo, hi)."""
    if not lo < hi:
        raise BadRangeError(f"need lo < hi, got [{lo}, {hi})")
    return float(rng.uniform(lo, hi))


def rng_gauss(rng: np.random.Generator, mu: float, sigma: float) -> float:
    """One Gaussian draw; sigma = 0 returns mu exactly."""
    if sigma < 0:
        raise BadRangeError(f"sigma must be >= 0, got {sigma}")
    return float(rng.normal(mu, sigma))
