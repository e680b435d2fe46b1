"""InfoNCE objective over real plus synthetic negatives, with exact query gradients.

The loss for query row q with positive key k and negative set N at
temperature t is

    -log( exp(q.k / t) / (exp(q.k / t) + sum_n exp(q.n / t)) )

averaged over the batch and evaluated through log-sum-exp so small
temperatures with thousands of negatives stay finite. Keys and negatives
are gradient constants: only the query path receives a gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoNegativesError, NotNormalizedError, ShapeMismatchError
from .mathops import as_f64, logsumexp_rows

_UNIT_TOL = 1e-5


@dataclass(frozen=True)
class LossConfig:
    """Temperature and symmetrization flags.

    cold_start permits an empty negative set, in which case the loss
    degenerates to 0 with zero gradient (the positive-only ratio is 1).
    """

    temperature: float = 0.2
    symmetric: bool = True
    cold_start: bool = True

    def __post_init__(self):
        if not 0.0 < self.temperature <= 10.0:
            raise ValueError(f"temperature must be in (0, 10], got {self.temperature}")


@dataclass
class LossOutput:
    loss: float
    grad_q: np.ndarray
    pos_logit_mean: float
    neg_logit_mean: float
    lse_mean: float


@dataclass
class NegativeSet:
    """Negatives for one loss direction: a (M1, d) matrix shared by every
    query plus an optional (B, M2, d) per-query stack, treated as their
    concatenation along the negative axis without materializing it."""

    shared: np.ndarray | None = None
    per_query: np.ndarray | None = None


@dataclass
class SymmetricLossOutput:
    loss: float
    grad_q1: np.ndarray
    grad_q2: np.ndarray
    view1: LossOutput
    view2: LossOutput


def _check_unit_rows(m: np.ndarray, what: str) -> None:
    norms = np.linalg.norm(m, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise NotNormalizedError(f"{what} rows must be unit norm")


def _normalize_negatives(negatives, b: int, d: int) -> NegativeSet:
    if negatives is None:
        return NegativeSet()
    if isinstance(negatives, NegativeSet):
        shared, per_query = negatives.shared, negatives.per_query
    else:
        arr = as_f64(negatives)
        if arr.ndim == 2:
            shared, per_query = arr, None
        elif arr.ndim == 3:
            shared, per_query = None, arr
        else:
            raise ShapeMismatchError("negatives must be a 2-D or 3-D array")
    if shared is not None:
        shared = as_f64(shared)
        if shared.ndim != 2:
            raise ShapeMismatchError(f"shared negatives must be 2-D, got {shared.shape}")
        if shared.shape[0] == 0:
            shared = None
        elif shared.shape[1] != d:
            raise ShapeMismatchError(f"shared negatives {shared.shape} incompatible with dim {d}")
    if per_query is not None:
        per_query = as_f64(per_query)
        if per_query.ndim != 3:
            raise ShapeMismatchError(f"per-query negatives must be 3-D, got {per_query.shape}")
        if per_query.shape[1] == 0:
            per_query = None
        elif per_query.shape[0] != b or per_query.shape[2] != d:
            raise ShapeMismatchError(
                f"per-query negatives {per_query.shape} incompatible with batch ({b}, {d})"
            )
    return NegativeSet(shared=shared, per_query=per_query)


def info_nce(q_batch, k_batch, negatives, cfg: LossConfig) -> LossOutput:
    """Mean InfoNCE loss and its exact gradient w.r.t. each query row.

    Row i of k_batch is the positive for row i of q_batch. negatives is a
    shared (M, d) matrix, a per-query (B, M, d) stack, a NegativeSet
    combining both, or None/empty for the cold-start case. k and the
    negatives are treated as constants.
    """
    q = as_f64(q_batch)
    k = as_f64(k_batch)
    if q.ndim != 2 or q.shape != k.shape:
        raise ShapeMismatchError(f"query/key shapes must match, got {q.shape} vs {k.shape}")
    _check_unit_rows(q, "query")
    _check_unit_rows(k, "key")
    b, d = q.shape
    tau = cfg.temperature

    negs = _normalize_negatives(negatives, b, d)
    m_shared = 0 if negs.shared is None else negs.shared.shape[0]
    m_perq = 0 if negs.per_query is None else negs.per_query.shape[1]
    m = m_shared + m_perq
    if m == 0 and not cfg.cold_start:
        raise NoNegativesError("no negatives available and cold start disabled")
    if m_shared:
        _check_unit_rows(negs.shared, "negative")
    if m_perq:
        _check_unit_rows(negs.per_query, "negative")

    pos = np.sum(q * k, axis=1) / tau
    blocks = [pos[:, None]]
    if m_shared:
        blocks.append((q @ negs.shared.T) / tau)
    if m_perq:
        blocks.append(np.einsum("bd,bmd->bm", q, negs.per_query) / tau)
    logits = np.concatenate(blocks, axis=1)
    lse = logsumexp_rows(logits)
    loss = float(np.mean(lse - pos))

    probs = np.exp(logits - lse[:, None])
    p_pos = probs[:, 0]
    weighted_negs = np.zeros((b, d))
    if m_shared:
        weighted_negs += probs[:, 1 : 1 + m_shared] @ negs.shared
    if m_perq:
        weighted_negs += np.einsum("bm,bmd->bd", probs[:, 1 + m_shared :], negs.per_query)
    grad_q = ((p_pos - 1.0)[:, None] * k + weighted_negs) / (tau * b)

    return LossOutput(
        loss=loss,
        grad_q=grad_q,
        pos_logit_mean=float(np.mean(pos)),
        neg_logit_mean=float(np.mean(logits[:, 1:])) if m > 0 else math.nan,
        lse_mean=float(np.mean(lse)),
    )


def info_nce_symmetric(
    q1, k1, q2, k2, negatives, cfg: LossConfig
) -> SymmetricLossOutput:
    """Two-view symmetric loss: info_nce(q1, k2) + info_nce(q2, k1).

    negatives may be a single specification shared by both directions or a
    (negatives_for_q1, negatives_for_q2) pair, since synthetic negatives
    are derived from the query side. Each element of a pair may itself be
    an array, a NegativeSet, or None.
    """
    if isinstance(negatives, tuple):
        if len(negatives) != 2:
            raise ShapeMismatchError("per-direction negatives must be a 2-tuple")
        negs1, negs2 = negatives
    else:
        negs1 = negs2 = negatives
    out1 = info_nce(q1, k2, negs1, cfg)
    out2 = info_nce(q2, k1, negs2, cfg)
    return SymmetricLossOutput(
        loss=out1.loss + out2.loss,
        grad_q1=out1.grad_q,
        grad_q2=out2.grad_q,
        view1=out1,
        view2=out2,
    )
