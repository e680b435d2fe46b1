"""Hard-negative mining and representation-space synthesis of extra negatives.

Six synthesis strategies fabricate new unit-norm negatives from a query and
its hardest queue negatives. Each strategy has a parameter-forced primitive
(testable in isolation) plus a driver that schedules strategies round-robin
and draws parameters in a documented order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadConfigError,
    EmptyInputError,
    EmptyQueueError,
    NotNormalizedError,
    ZeroNormError,
)
from .mathops import ZERO_NORM_EPS, as_f64, l2_normalize, top_k_indices

STRATEGIES = (
    "interpolation",
    "extrapolation",
    "mixing",
    "jittering",
    "perturbation",
    "adversarial",
)

_QUERY_NORM_TOL = 1e-5


@dataclass(frozen=True)
class SynthesisConfig:
    """Strategy selection and per-strategy parameters.

    n_hardest is the size of the mined hard-negative pool, n_synthetic the
    number of fabricated negatives per query. Strategies are normalized to
    the canonical order in STRATEGIES regardless of input order.
    """

    strategies: tuple[str, ...] = STRATEGIES
    n_hardest: int = 128
    n_synthetic: int = 114
    alpha_range: tuple[float, float] = (0.05, 0.5)
    beta_range: tuple[float, float] = (0.05, 0.5)
    sigma: float = 0.1
    mask_fraction: float = 0.1
    eta: float = 0.1

    def __post_init__(self):
        enabled = tuple(s for s in STRATEGIES if s in set(self.strategies))
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise BadConfigError(f"unknown strategies: {sorted(unknown)}")
        if not enabled:
            raise BadConfigError("at least one synthesis strategy must be enabled")
        object.__setattr__(self, "strategies", enabled)
        min_hard = 2 if "mixing" in enabled else 1
        if self.n_hardest < min_hard:
            raise BadConfigError(
                f"n_hardest must be >= {min_hard} for strategies {enabled}"
            )
        if self.n_synthetic < 0:
            raise BadConfigError("n_synthetic must be >= 0")
        lo, hi = self.alpha_range
        if not (0.0 < lo < hi <= 0.5):
            raise BadConfigError(f"alpha_range must satisfy 0 < lo < hi <= 0.5, got {self.alpha_range}")
        lo, hi = self.beta_range
        if not (0.0 < lo < hi):
            raise BadConfigError(f"beta_range must satisfy 0 < lo < hi, got {self.beta_range}")
        if self.sigma < 0:
            raise BadConfigError("sigma must be >= 0")
        if not 0.0 <= self.mask_fraction < 1.0:
            raise BadConfigError("mask_fraction must be in [0, 1)")
        if self.eta < 0:
            raise BadConfigError("eta must be >= 0")


@dataclass
class HardNegativeSet:
    """The n queue rows most similar to one query, descending by similarity."""

    query_index: int
    member_indices: np.ndarray
    members: np.ndarray


@dataclass
class SyntheticNegativeBatch:
    """Fabricated unit-norm negatives for one query, with per-row strategy tags."""

    vectors: np.ndarray
    strategy_tags: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.vectors.shape[0]


def mine_hardest(q, queue_snapshot, n: int, query_index: int = 0) -> HardNegativeSet:
    """Select the n queue rows with the largest cosine similarity to q.

    Ties break toward the smaller queue index. The snapshot rows are unit
    norm by queue invariant, so the dot product is the cosine similarity.
    """
    q = as_f64(q)
    snap = as_f64(queue_snapshot)
    if snap.ndim != 2 or snap.shape[0] == 0:
        raise EmptyQueueError("queue snapshot has no rows")
    if abs(float(np.linalg.norm(q)) - 1.0) > _QUERY_NORM_TOL:
        raise NotNormalizedError("query must be unit norm")
    sims = snap @ q
    idx = top_k_indices(sims, n)
    return HardNegativeSet(
        query_index=query_index, member_indices=idx, members=snap[idx].copy()
    )


# Parameter-forced strategy primitives. Each returns one unit-norm vector.

def interpolate(q, n, alpha: float) -> np.ndarray:
    """Move the negative a fraction alpha of the way toward the query."""
    return l2_normalize(as_f64(n) + alpha * (as_f64(q) - as_f64(n)))


def extrapolate(q, n, beta: float) -> np.ndarray:
    """Push the negative further away from the query along n - q."""
    n = as_f64(n)
    return l2_normalize(n + beta * (n - as_f64(q)))


def mix(n_i, n_j, lam: float) -> np.ndarray:
    """Convex combination of two distinct hard negatives."""
    return l2_normalize(lam * as_f64(n_i) + (1.0 - lam) * as_f64(n_j))


def jitter(n, eps) -> np.ndarray:
    """Additive noise; eps is the pre-drawn Gaussian noise vector."""
    return l2_normalize(as_f64(n) + as_f64(eps))


def perturb(n, mask_indices) -> np.ndarray:
    """Zero the given coordinates of the negative and renormalize."""
    v = as_f64(n).copy()
    v[np.asarray(mask_indices, dtype=np.intp)] = 0.0
    return l2_normalize(v)


def adversarial(q, n, eta: float) -> np.ndarray:
    """Step the negative along the component of q orthogonal to n.

    The update direction q - (q.n) n is orthogonal to n, so any eta > 0
    strictly increases similarity to q unless q and n are collinear.
    """
    q = as_f64(q)
    n = as_f64(n)
    return l2_normalize(n + eta * (q - float(np.dot(q, n)) * n))


def synthesize(
    q, hard: HardNegativeSet, cfg: SynthesisConfig, rng: np.random.Generator
) -> SyntheticNegativeBatch:
    """Fabricate cfg.n_synthetic unit-norm negatives from the hard set.

    Row j is produced by the enabled strategy at position j mod S (canonical
    strategy order, round-robin), from a basis negative drawn uniformly from
    the hard members.

    Draw order, fixed for reproducibility:
      1. basis indices for all rows: one integers(0, n_members, size=L) call;
      2. per enabled strategy in canonical order, that strategy's parameters
         for its rows in ascending row order:
         interpolation  uniform(alpha_lo, alpha_hi, size=g)
         extrapolation  uniform(beta_lo, beta_hi, size=g)
         mixing         integers(0, n_members - 1, size=g) partner offsets,
                        then uniform(0, 1, size=g) mixing weights
         jittering      normal(0, sigma, size=(g, d))
         perturbation   random(size=(g, d)) scores; each row masks the
                        ceil(p * d) coordinates with the smallest scores; a
                        degenerate row redraws its score vector once
                        (random(size=d)), then raises ZeroNormError
         adversarial    no draws.

    Mixing partners: an offset r in [0, n_members - 1) maps to partner index
    r if r < basis else r + 1, uniform over indices distinct from the basis.
    """
    q = as_f64(q)
    members = as_f64(hard.members)
    n_members = members.shape[0]
    if n_members < 1:
        raise EmptyQueueError("hard negative set is empty")
    if "mixing" in cfg.strategies and n_members < 2:
        raise BadConfigError("mixing requires at least 2 hard negatives")
    d = members.shape[1]
    total = cfg.n_synthetic
    vectors = np.empty((total, d))
    tags: list[str] = [""] * total
    if total == 0:
        return SyntheticNegativeBatch(vectors=vectors, strategy_tags=tags)

    enabled = cfg.strategies
    basis_idx = rng.integers(0, n_members, size=total)

    for pos, strat in enumerate(enabled):
        # Round-robin assignment: row j runs strategy j mod len(enabled).
        rows = np.arange(pos, total, len(enabled), dtype=np.intp)
        if rows.size == 0:
            continue
        bases = members[basis_idx[rows]]
        if strat == "interpolation":
            alphas = rng.uniform(cfg.alpha_range[0], cfg.alpha_range[1], size=rows.size)
            raw = bases + alphas[:, None] * (q[None, :] - bases)
        elif strat == "extrapolation":
            betas = rng.uniform(cfg.beta_range[0], cfg.beta_range[1], size=rows.size)
            raw = bases + betas[:, None] * (bases - q[None, :])
        elif strat == "mixing":
            offsets = rng.integers(0, n_members - 1, size=rows.size)
            lams = rng.uniform(0.0, 1.0, size=rows.size)
            partners = np.where(offsets < basis_idx[rows], offsets, offsets + 1)
            raw = lams[:, None] * bases + (1.0 - lams)[:, None] * members[partners]
        elif strat == "jittering":
            eps = rng.normal(0.0, cfg.sigma, size=(rows.size, d))
            raw = bases + eps
        elif strat == "perturbation":
            n_masked = int(np.ceil(cfg.mask_fraction * d))
            scores = rng.random(size=(rows.size, d))
            raw = bases.copy()
            if n_masked > 0:
                masks = np.argsort(scores, axis=1, kind="stable")[:, :n_masked]
                np.put_along_axis(raw, masks, 0.0, axis=1)
                dead = np.flatnonzero(np.linalg.norm(raw, axis=1) <= ZERO_NORM_EPS)
                for i in dead:
                    # One mask redraw per degenerate row, in ascending row order.
                    retry = np.argsort(rng.random(size=d), kind="stable")[:n_masked]
                    raw[i] = bases[i]
                    raw[i, retry] = 0.0
        else:  # adversarial
            dots = bases @ q
            raw = bases + cfg.eta * (q[None, :] - dots[:, None] * bases)
        norms = np.linalg.norm(raw, axis=1)
        if np.any(norms <= ZERO_NORM_EPS):
            raise ZeroNormError(f"degenerate {strat} synthesis")
        vectors[rows] = raw / norms[:, None]
        for r in rows:
            tags[r] = strat

    return SyntheticNegativeBatch(vectors=vectors, strategy_tags=tags)


def hardness_stats(q, real_negs, synth_negs) -> tuple[float, float, float]:
    """(mean real similarity, mean synthetic similarity, max synthetic similarity)."""
    q = as_f64(q)
    real = np.atleast_2d(as_f64(real_negs))
    synth = np.atleast_2d(as_f64(synth_negs))
    if real.shape[0] == 0 or real.size == 0 or synth.shape[0] == 0 or synth.size == 0:
        raise EmptyInputError("hardness stats need at least one row per side")
    qn = float(np.linalg.norm(q))
    if qn <= ZERO_NORM_EPS:
        raise ZeroNormError("query has zero norm")
    real_sims = real @ q / (np.linalg.norm(real, axis=1) * qn)
    synth_sims = synth @ q / (np.linalg.norm(synth, axis=1) * qn)
    return float(np.mean(real_sims)), float(np.mean(synth_sims)), float(np.max(synth_sims))
