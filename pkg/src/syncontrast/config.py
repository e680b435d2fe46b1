"""Run configuration: dataclass, JSON loading, dotted-path overrides, validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

from .data import AugmentationParams, MixConfig
from .errors import BadConfigError
from .synthesis import SynthesisConfig

LR_SCHEDULES = ("constant", "cosine")


@dataclass
class TrainConfig:
    """Everything that determines a pretraining run, seed included."""

    seed: int = 0
    epochs: int = 50
    max_steps: int | None = None
    batch_size: int = 32
    lr: float = 0.3
    weight_decay: float = 0.0
    momentum: float = 0.99
    queue_capacity: int = 1024
    temperature: float = 0.2
    encoder_dims: tuple[int, ...] = (256, 256, 128, 64)
    enqueue_keys: bool = True
    lr_schedule: str = "constant"
    real_path: str | None = None
    synthetic_path: str | None = None
    mix: MixConfig = field(default_factory=MixConfig)
    augmentation: AugmentationParams = field(default_factory=AugmentationParams)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)

    def __post_init__(self):
        self.encoder_dims = tuple(int(d) for d in self.encoder_dims)
        if self.epochs < 0:
            raise BadConfigError("epochs must be >= 0")
        if self.max_steps is not None and self.max_steps < 0:
            raise BadConfigError("max_steps must be >= 0")
        if self.batch_size < 1:
            raise BadConfigError("batch_size must be >= 1")
        if self.lr <= 0:
            raise BadConfigError("lr must be > 0")
        if self.weight_decay < 0:
            raise BadConfigError("weight_decay must be >= 0")
        if not 0.0 <= self.momentum <= 1.0:
            raise BadConfigError("momentum must be in [0, 1]")
        if self.queue_capacity < 1:
            raise BadConfigError("queue_capacity must be >= 1")
        if self.batch_size > self.queue_capacity:
            raise BadConfigError("batch_size may not exceed queue_capacity")
        if not 0.0 < self.temperature <= 10.0:
            raise BadConfigError("temperature must be in (0, 10]")
        if len(self.encoder_dims) < 2 or any(d <= 0 for d in self.encoder_dims):
            raise BadConfigError("encoder_dims needs >= 2 positive entries")
        if self.lr_schedule not in LR_SCHEDULES:
            raise BadConfigError(f"lr_schedule must be one of {LR_SCHEDULES}")
        if self.synthesis.n_hardest > self.queue_capacity:
            raise BadConfigError("synthesis.n_hardest may not exceed queue_capacity")

    @property
    def synthetic_ratio(self) -> float:
        """Fraction of the negative pool that is synthetic at loss time."""
        k, l = self.queue_capacity, self.synthesis.n_synthetic
        return l / (k + l)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder_dims"] = list(self.encoder_dims)
        d["synthesis"]["strategies"] = list(self.synthesis.strategies)
        d["synthesis"]["alpha_range"] = list(self.synthesis.alpha_range)
        d["synthesis"]["beta_range"] = list(self.synthesis.beta_range)
        d["augmentation"]["scale_range"] = list(self.augmentation.scale_range)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        raw = dict(raw)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise BadConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "mix" in raw:
                raw["mix"] = MixConfig(**raw["mix"])
            if "augmentation" in raw:
                aug = dict(raw["augmentation"])
                if "scale_range" in aug:
                    aug["scale_range"] = tuple(aug["scale_range"])
                raw["augmentation"] = AugmentationParams(**aug)
            if "synthesis" in raw:
                syn = dict(raw["synthesis"])
                for key in ("alpha_range", "beta_range"):
                    if key in syn:
                        syn[key] = tuple(syn[key])
                if "strategies" in syn:
                    syn["strategies"] = tuple(syn["strategies"])
                raw["synthesis"] = SynthesisConfig(**syn)
            return cls(**raw)
        except TypeError as exc:
            raise BadConfigError(str(exc)) from exc

    def hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()
    ).hexdigest()[:16]


def parse_override(text: str) -> tuple[list[str], object]:
    """Parse a KEY=VALUE override; the value is JSON when possible, else a string."""
    if "=" not in text:
        raise BadConfigError(f"override {text!r} is not of the form key=value")
    key, _, value = text.partition("=")
    key = key.strip()
    if not key:
        raise BadConfigError(f"override {text!r} has an empty key")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.split("."), parsed


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply dotted-path KEY=VALUE overrides to a raw config dict."""
    out = json.loads(json.dumps(raw))
    for text in overrides:
        path, value = parse_override(text)
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise BadConfigError(f"cannot descend into {part!r} in {text!r}")
        node[path[-1]] = value
    return out


def load_config(path, overrides=()) -> TrainConfig:
    """Load a JSON config file and apply dotted overrides."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BadConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise BadConfigError(f"{path}: config root must be an object")
    return TrainConfig.from_dict(apply_overrides(raw, overrides))


def with_axis_value(config: TrainConfig, axis: str, value) -> TrainConfig:
    """A copy of the config with one sweep axis applied.

    hardness sets the mined pool size N, synthetic_ratio sets L from
    r = L / (K + L) at the configured queue capacity, real_fraction sets rho.
    """
    if axis == "hardness":
        return replace(config, synthesis=replace(config.synthesis, n_hardest=int(value)))
    if axis == "synthetic_ratio":
        r = float(value)
        if not 0.0 <= r < 1.0:
            raise BadConfigError("synthetic_ratio must be in [0, 1)")
        l = int(round(config.queue_capacity * r / (1.0 - r)))
        return replace(config, synthesis=replace(config.synthesis, n_synthetic=l))
    if axis == "real_fraction":
        return replace(config, mix=MixConfig(real_fraction=float(value)))
    raise BadConfigError(f"unknown sweep axis {axis!r}")
