"""Pretraining loop, sweeps, metrics stream, and run persistence.

One training step, in normative order:

  1. two augmented views per sample, in batch row order;
  2. both views through the online encoder (traced) and the target encoder;
  3. per query row and per direction: mine the hardest queue negatives,
     synthesize extra negatives, and assemble queue snapshot + synthetics;
  4. symmetric InfoNCE loss with exact query gradients;
  5. backprop through the online encoder and one SGD step;
  6. EMA update of the target encoder;
  7. enqueue the second view's target keys;
  8. append one metrics record.

Randomness comes from a single generator owned by the run state. Per step
the draw order is: augmentations (sample by sample, each sample's first
view before its second), then synthesis for direction 1 (query rows in
order), then synthesis for direction 2. Epoch boundaries draw the batch
permutations documented in data.mixed_batches. Checkpoints store the
generator state, so resuming from an epoch boundary replays the identical
trajectory.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, with_axis_value
from .data import Dataset, batches_per_epoch, dataset_read, mixed_batches, two_views
from .encoder import encoder_backward, encoder_embed, encoder_forward, encoder_init, sgd_step
from .errors import BadConfigError
from .loss import LossConfig, NegativeSet, info_nce_symmetric
from .mathops import make_rng, restore_rng, rng_state
from .momentum import EncoderPair, NegativeQueue, ema_update, make_pair
from .probe import ProbeResult, embed_dataset, evaluate, fit_linear
from .synthesis import mine_hardest, synthesize

METRICS_FLUSH_EVERY = 50


class MetricsSink:
    """Collects per-step records; optionally streams them to a JSONL file."""

    def __init__(self, path=None, append: bool = False):
        self.records: list[dict] = []
        self.path = path
        self._fh = open(path, "a" if append else "w") if path else None
        self._pending = 0

    def append(self, record: dict) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(json.dumps(record) + "\n")
            self._pending += 1
            if self._pending >= METRICS_FLUSH_EVERY:
                self._fh.flush()
                self._pending = 0

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None


@dataclass
class RunState:
    """Mutable state owned by exactly one training loop."""

    step: int
    pair: EncoderPair
    queue: NegativeQueue
    rng: np.random.Generator
    metrics: MetricsSink = field(default_factory=MetricsSink)


def init_state(config: TrainConfig, metrics_path=None) -> RunState:
    """Fresh run state; parameter initialization is the seed's first draw."""
    rng = make_rng(config.seed)
    online = encoder_init(config.encoder_dims, rng)
    return RunState(
        step=0,
        pair=make_pair(online, config.momentum),
        queue=NegativeQueue(config.queue_capacity, config.encoder_dims[-1]),
        rng=rng,
        metrics=MetricsSink(metrics_path),
    )


def step_lr(config: TrainConfig, step: int, total_steps: int) -> float:
    if config.lr_schedule == "cosine" and total_steps > 0:
        return config.lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))
    return config.lr


def _direction_negatives(q_rows, snapshot, config: TrainConfig, rng):
    """Negatives and hardness aggregates for one loss direction.

    Synthesis runs when the queue holds enough entries for every enabled
    strategy (two for mixing, one otherwise); the mined pool size is capped
    at the current fill during cold start.
    """
    scfg = config.synthesis
    if snapshot is None:
        return None, math.nan, math.nan
    fill = snapshot.shape[0]
    mean_real = float(np.mean(q_rows @ snapshot.T))
    n_eff = min(scfg.n_hardest, fill)
    min_basis = 2 if "mixing" in scfg.strategies else 1
    if scfg.n_synthetic == 0 or n_eff < min_basis:
        return NegativeSet(shared=snapshot), mean_real, math.nan
    synth = np.empty((q_rows.shape[0], scfg.n_synthetic, q_rows.shape[1]))
    synth_sims = 0.0
    for i in range(q_rows.shape[0]):
        hard = mine_hardest(q_rows[i], snapshot, n_eff, query_index=i)
        batch = synthesize(q_rows[i], hard, scfg, rng)
        synth[i] = batch.vectors
        synth_sims += float(np.mean(batch.vectors @ q_rows[i]))
    mean_synth = synth_sims / q_rows.shape[0]
    return NegativeSet(shared=snapshot, per_query=synth), mean_real, mean_synth


def train_step(state: RunState, batch, config: TrainConfig, total_steps: int = 0) -> RunState:
    """Run one full training step on a feature batch; mutates and returns state."""
    b = batch.shape[0]
    view_q = np.empty_like(batch)
    view_k = np.empty_like(batch)
    for i in range(b):
        view_q[i], view_k[i] = two_views(batch[i], config.augmentation, state.rng)

    online = state.pair.online
    q1, trace1 = encoder_forward(online, view_q)
    q2, trace2 = encoder_forward(online, view_k)
    k1 = encoder_embed(state.pair.target, view_q)
    k2 = encoder_embed(state.pair.target, view_k)

    snapshot = state.queue.snapshot() if len(state.queue) > 0 else None
    negs1, real1, synth1 = _direction_negatives(q1, snapshot, config, state.rng)
    negs2, real2, synth2 = _direction_negatives(q2, snapshot, config, state.rng)

    loss_cfg = LossConfig(temperature=config.temperature, symmetric=True)
    out = info_nce_symmetric(q1, k1, q2, k2, (negs1, negs2), loss_cfg)

    grads = encoder_backward(online, trace1, out.grad_q1).add(
        encoder_backward(online, trace2, out.grad_q2)
    )
    lr = step_lr(config, state.step, total_steps)
    new_online = sgd_step(online, grads, lr, config.weight_decay)
    state.pair = ema_update(
        EncoderPair(online=new_online, target=state.pair.target, momentum=config.momentum)
    )
    if config.enqueue_keys:
        state.queue.enqueue(k2)
    state.step += 1

    mean_real = np.nanmean([real1, real2]) if not (math.isnan(real1) and math.isnan(real2)) else math.nan
    mean_synth = np.nanmean([synth1, synth2]) if not (math.isnan(synth1) and math.isnan(synth2)) else math.nan
    state.metrics.append(
        {
            "step": state.step,
            "loss": out.loss,
            "queue_fill": len(state.queue),
            "mean_real_hardness": None if math.isnan(mean_real) else float(mean_real),
            "mean_synth_hardness": None if math.isnan(mean_synth) else float(mean_synth),
            "lr": lr,
            "real_fraction": config.mix.real_fraction,
            "n_hardest": config.synthesis.n_hardest,
            "n_synthetic": config.synthesis.n_synthetic,
        }
    )
    return state


@dataclass
class PretrainResult:
    state: RunState
    checkpoint_path: str | None
    metrics_path: str | None
    steps_per_epoch: int

    @property
    def final_loss(self) -> float:
        return self.state.metrics.records[-1]["loss"] if self.state.metrics.records else math.nan


def _load_sources(config: TrainConfig, real, synthetic):
    if real is None and config.real_path:
        real = dataset_read(config.real_path)
    if synthetic is None and config.synthetic_path:
        synthetic = dataset_read(config.synthetic_path)
    rho = config.mix.real_fraction
    if rho > 0 and real is None:
        raise BadConfigError("mix demands real data but no real dataset was given")
    if math.ceil(rho * config.batch_size) < config.batch_size and synthetic is None:
        raise BadConfigError("mix demands synthetic data but no synthetic dataset was given")
    for ds, name in ((real, "real"), (synthetic, "synthetic")):
        if ds is not None and ds.dim != config.encoder_dims[0]:
            raise BadConfigError(
                f"{name} dataset dim {ds.dim} != encoder input dim {config.encoder_dims[0]}"
            )
    return real, synthetic


def pretrain(
    config: TrainConfig,
    out_dir=None,
    real: Dataset | None = None,
    synthetic: Dataset | None = None,
    resume_from=None,
) -> PretrainResult:
    """Run the full pretraining loop.

    Datasets may be passed in memory or read from the configured paths.
    When out_dir is given, writes the resolved config, a metrics JSONL
    stream, a rolling epoch checkpoint (last.s2ck), and final.s2ck.
    Resuming is supported from epoch-boundary checkpoints produced by an
    identical config.
    """
    real, synthetic = _load_sources(config, real, synthetic)
    spe = batches_per_epoch(real, synthetic, config.mix, config.batch_size)
    total_steps = config.epochs * spe
    if config.max_steps is not None:
        total_steps = min(total_steps, config.max_steps)

    metrics_path = None
    ckpt_last = None
    ckpt_final = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.jsonl")
        ckpt_last = os.path.join(out_dir, "last.s2ck")
        ckpt_final = os.path.join(out_dir, "final.s2ck")
        with open(os.path.join(out_dir, "config.json"), "w") as fh:
            json.dump(config.to_dict(), fh, indent=2, sort_keys=True)

    if resume_from is not None:
        data = load_checkpoint(resume_from)
        if data.step % spe != 0:
            raise BadConfigError(
                f"checkpoint at step {data.step} is not an epoch boundary (epoch = {spe} steps)"
            )
        state = RunState(
            step=data.step,
            pair=EncoderPair(online=data.online, target=data.target, momentum=config.momentum),
            queue=data.queue,
            rng=restore_rng(data.rng_state),
            metrics=MetricsSink(metrics_path, append=True),
        )
        start_epoch = data.step // spe
    else:
        state = init_state(config, metrics_path=metrics_path)
        start_epoch = 0

    def dump(path):
        if path is not None:
            save_checkpoint(
                path, state.step, rng_state(state.rng), state.pair.online,
                state.pair.target, state.queue,
            )

    try:
        for _epoch in range(start_epoch, config.epochs):
            if state.step >= total_steps:
                break
            for batch in mixed_batches(
                real, synthetic, config.mix, config.batch_size, 1, state.rng
            ):
                train_step(state, batch, config, total_steps)
                if state.step >= total_steps:
                    break
            dump(ckpt_last)
        dump(ckpt_final)
    finally:
        state.metrics.close()
    return PretrainResult(
        state=state, checkpoint_path=ckpt_final, metrics_path=metrics_path, steps_per_epoch=spe
    )


def run_probe(
    params, train_ds: Dataset, eval_ds: Dataset, lr: float = 0.5, steps: int = 1000
) -> ProbeResult:
    """Standard linear-probe protocol on un-augmented samples."""
    train_emb, train_labels = embed_dataset(params, train_ds)
    eval_emb, eval_labels = embed_dataset(params, eval_ds)
    fit = fit_linear(train_emb, train_labels, train_ds.n_classes, lr=lr, steps=steps)
    return evaluate(fit.weights, fit.bias, eval_emb, eval_labels, train_loss_final=fit.final_loss)


SWEEP_AXES = ("hardness", "synthetic_ratio", "real_fraction")


def sweep(
    base_config: TrainConfig,
    axis: str,
    values,
    out_dir,
    probe_train: Dataset,
    probe_eval: Dataset,
    real: Dataset | None = None,
    synthetic: Dataset | None = None,
    probe_lr: float = 0.5,
    probe_steps: int = 1000,
) -> list[dict]:
    """One pretrain+probe per axis value, shared seed; writes sweep.csv.

    Rows are emitted in input order with columns
    (axis_value, top1, top5, final_loss).
    """
    if axis not in SWEEP_AXES:
        raise BadConfigError(f"axis must be one of {SWEEP_AXES}")
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for value in values:
        cfg = with_axis_value(base_config, axis, value)
        point_dir = os.path.join(out_dir, f"{axis}_{value}")
        result = pretrain(cfg, out_dir=point_dir, real=real, synthetic=synthetic)
        probe = run_probe(
            result.state.pair.online, probe_train, probe_eval, lr=probe_lr, steps=probe_steps
        )
        rows.append(
            {
                "axis_value": value,
                "top1": probe.top1,
                "top5": probe.top5,
                "final_loss": result.final_loss,
            }
        )
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["axis_value", "top1", "top5", "final_loss"])
        writer.writeheader()
        writer.writerows(rows)
    return rows
