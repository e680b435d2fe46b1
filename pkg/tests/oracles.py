"""Independent reference implementations used as test oracles.

Everything here is written from first principles (sorting, loops, finite
differences, extended precision) and never calls into the code paths it
checks.
"""

import math

import numpy as np


def brute_force_top_k(scores, k):
    """Full sort, descending by score with ties broken by smaller index."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[:k]


def softmax_mpmath(logits):
    """Softmax evaluated at 50 significant digits."""
    import mpmath

    with mpmath.workdps(50):
        exps = [mpmath.exp(mpmath.mpf(float(x))) for x in logits]
        total = sum(exps)
        return [float(e / total) for e in exps]


def central_difference(f, x, h=1e-5):
    """Elementwise central finite differences of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (f(xp) - f(xm)) / (2.0 * h)
        it.iternext()
    return grad


def relative_error(analytic, numeric):
    """Sup-norm relative error between two gradient arrays."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    denom = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / denom)


def info_nce_scalar(q, k, negatives, tau):
    """Direct single-row evaluation of the contrastive objective with math.exp."""
    pos = math.exp(float(np.dot(q, k)) / tau)
    denom = pos + sum(math.exp(float(np.dot(q, n)) / tau) for n in negatives)
    return -math.log(pos / denom)


def nearest_centroid_accuracy(features, labels, n_classes):
    """Classify by the closest per-class mean; returns the accuracy."""
    centroids = np.stack(
        [features[labels == c].mean(axis=0) for c in range(n_classes)]
    )
    dists = ((features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return float(np.mean(np.argmin(dists, axis=1) == labels))


def replay_fifo(capacity, batches):
    """List-based FIFO oracle: returns the expected queue contents in order."""
    items = []
    for batch in batches:
        for row in batch:
            items.append(np.array(row))
    return items[-capacity:] if len(items) > capacity else items


def top_k_hits(logits, labels, k):
    """Per-sample loop: is the label among the k best logits (ties by index)?"""
    hits = []
    for row, label in zip(logits, labels):
        order = sorted(range(len(row)), key=lambda j: (-row[j], j))[:k]
        hits.append(label in order)
    return np.array(hits)
