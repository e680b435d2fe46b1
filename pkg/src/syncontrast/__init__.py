"""Contrastive representation learning with a momentum queue, synthetic hard
negatives fabricated in embedding space, and mixed real/synthetic training data."""

from .config import TrainConfig, load_config
from .data import (
    AugmentationParams,
    Dataset,
    MixConfig,
    dataset_read,
    dataset_write,
    mixed_batches,
    synthetic_clone,
    toy_generate,
    two_views,
)
from .encoder import (
    EncoderParams,
    Gradients,
    encoder_backward,
    encoder_embed,
    encoder_forward,
    encoder_init,
    sgd_step,
)
from .errors import SynContrastError
from .estimators import ContrastiveEncoder, LinearProbe
from .loss import LossConfig, LossOutput, NegativeSet, info_nce, info_nce_symmetric
from .mathops import (
    cosine_sim,
    l2_normalize,
    make_rng,
    stable_softmax,
    top_k_indices,
)
from .momentum import EncoderPair, NegativeQueue, ema_update, make_pair
from .probe import ProbeResult, embed_dataset, evaluate, fit_linear
from .synthesis import (
    STRATEGIES,
    HardNegativeSet,
    SynthesisConfig,
    SyntheticNegativeBatch,
    hardness_stats,
    mine_hardest,
    synthesize,
)
from .training import RunState, pretrain, run_probe, sweep, train_step

__version__ = "0.1.0"

__all__ = [
    "AugmentationParams",
    "ContrastiveEncoder",
    "Dataset",
    "EncoderPair",
    "EncoderParams",
    "Gradients",
    "HardNegativeSet",
    "LinearProbe",
    "LossConfig",
    "LossOutput",
    "MixConfig",
    "NegativeSet",
    "NegativeQueue",
    "ProbeResult",
    "RunState",
    "STRATEGIES",
    "SynContrastError",
    "SynthesisConfig",
    "SyntheticNegativeBatch",
    "TrainConfig",
    "cosine_sim",
    "dataset_read",
    "dataset_write",
    "ema_update",
    "embed_dataset",
    "encoder_backward",
    "encoder_embed",
    "encoder_forward",
    "encoder_init",
    "evaluate",
    "fit_linear",
    "hardness_stats",
    "info_nce",
    "info_nce_symmetric",
    "l2_normalize",
    "load_config",
    "make_pair",
    "make_rng",
    "mine_hardest",
    "mixed_batches",
    "pretrain",
    "run_probe",
    "sgd_step",
    "stable_softmax",
    "sweep",
    "synthesize",
    "synthetic_clone",
    "top_k_indices",
    "toy_generate",
    "train_step",
    "two_views",
]
