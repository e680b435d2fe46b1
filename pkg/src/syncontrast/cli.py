"""Command-line interface.

Subcommands: generate-data, pretrain, probe, sweep, inspect-checkpoint.
Exit codes: 0 success, 2 configuration or validation failure, 1 runtime
error (missing or corrupt files, failed runs).
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys

import click

from .checkpoint import load_checkpoint
from .config import config_hash, load_config
from .data import dataset_read, dataset_write, split_per_class, synthetic_clone, toy_generate
from .errors import BadConfigError, SynContrastError
from .mathops import make_rng
from .training import SWEEP_AXES, pretrain as run_pretrain, run_probe, sweep as run_sweep


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BadConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except (SynContrastError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """Contrastive pretraining with a momentum queue and synthetic hard negatives."""


@main.command("generate-data")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--n-classes", default=10, show_default=True)
@click.option("--per-class", default=100, show_default=True, help="Training samples per class.")
@click.option("--eval-per-class", default=20, show_default=True)
@click.option("--dim", default=256, show_default=True)
@click.option("--class-sep", default=16.0, show_default=True)
@click.option("--within-scale", default=4.0, show_default=True)
@click.option("--distribution-shift", default=2.0, show_default=True,
              help="Scale of the offset between real and synthetic class means.")
@click.option("--synthetic-per-class", default=None, type=int,
              help="Defaults to --per-class.")
@click.option("--seed", default=0, show_default=True)
@handle_errors
def generate_data(out_dir, n_classes, per_class, eval_per_class, dim, class_sep,
                  within_scale, distribution_shift, synthetic_per_class, seed):
    """Write toy real train/eval datasets plus a shifted synthetic clone."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    rng = make_rng(seed)
    full = toy_generate(n_classes, per_class + eval_per_class, dim, class_sep, within_scale, rng)
    train, eval_ds = split_per_class(full, per_class)
    clone = synthetic_clone(
        train, synthetic_per_class or per_class, distribution_shift, within_scale, rng
    )
    paths = {
        "real_train": os.path.join(out_dir, "real_train.s2co"),
        "real_eval": os.path.join(out_dir, "real_eval.s2co"),
        "synthetic_train": os.path.join(out_dir, "synthetic_train.s2co"),
    }
    dataset_write(paths["real_train"], train)
    dataset_write(paths["real_eval"], eval_ds)
    dataset_write(paths["synthetic_train"], clone)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


def _config_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(exists=False), help="JSON config file.")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Dotted-path config override, repeatable.")(fn)
    fn = click.option("--seed", default=None, type=int, help="Override config seed.")(fn)
    return fn


def _load(config_path, overrides, seed):
    import os

    if not os.path.exists(config_path):
        raise BadConfigError(f"config file not found: {config_path}")
    config = load_config(config_path, overrides)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


@main.command("pretrain")
@_config_options
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--resume", "resume_from", default=None, type=click.Path(),
              help="Epoch-boundary checkpoint to continue from.")
@handle_errors
def pretrain_cmd(config_path, overrides, seed, out_dir, resume_from):
    """Run contrastive pretraining and write checkpoints plus metrics."""
    config = _load(config_path, overrides, seed)
    result = run_pretrain(config, out_dir=out_dir, resume_from=resume_from)
    click.echo(f"steps: {result.state.step}")
    click.echo(f"final loss: {result.final_loss:.6f}")
    click.echo(f"checkpoint: {result.checkpoint_path}")
    click.echo(f"metrics: {result.metrics_path}")


@main.command("probe")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path())
@click.option("--train", "train_path", required=True, type=click.Path())
@click.option("--eval", "eval_path", required=True, type=click.Path())
@click.option("--lr", default=0.5, show_default=True)
@click.option("--steps", default=1000, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the result JSON here as well as stdout.")
@handle_errors
def probe_cmd(checkpoint_path, train_path, eval_path, lr, steps, out_path):
    """Linear-probe a frozen checkpointed encoder on labeled datasets."""
    data = load_checkpoint(checkpoint_path)
    train_ds = dataset_read(train_path)
    eval_ds = dataset_read(eval_path)
    result = run_probe(data.online, train_ds, eval_ds, lr=lr, steps=steps)
    payload = {
        "top1": result.top1,
        "top5": result.top5,
        "n_eval": result.n_eval,
        "train_loss_final": result.train_loss_final,
        "config_hash": config_hash(
            {"checkpoint": str(checkpoint_path), "train": str(train_path),
             "eval": str(eval_path), "lr": lr, "steps": steps}
        ),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command("sweep")
@_config_options
@click.option("--axis", required=True, type=click.Choice(SWEEP_AXES))
@click.option("--values", required=True,
              help="Comma-separated axis values, e.g. 0,0.25,0.5.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--probe-train", "probe_train_path", required=True, type=click.Path())
@click.option("--probe-eval", "probe_eval_path", required=True, type=click.Path())
@click.option("--probe-lr", default=0.5, show_default=True)
@click.option("--probe-steps", default=1000, show_default=True)
@handle_errors
def sweep_cmd(config_path, overrides, seed, axis, values, out_dir,
              probe_train_path, probe_eval_path, probe_lr, probe_steps):
    """Pretrain and probe once per axis value; emit sweep.csv."""
    config = _load(config_path, overrides, seed)
    try:
        parsed = [float(v) if axis != "hardness" else int(v) for v in values.split(",") if v != ""]
    except ValueError as exc:
        raise BadConfigError(f"bad --values list: {exc}") from exc
    if not parsed:
        raise BadConfigError("--values is empty")
    rows = run_sweep(
        config, axis, parsed, out_dir,
        probe_train=dataset_read(probe_train_path),
        probe_eval=dataset_read(probe_eval_path),
        probe_lr=probe_lr, probe_steps=probe_steps,
    )
    for row in rows:
        click.echo(
            f"{axis}={row['axis_value']}: top1={row['top1']:.4f} "
            f"top5={row['top5']:.4f} final_loss={row['final_loss']:.4f}"
        )
    click.echo(f"csv: {out_dir}/sweep.csv")


@main.command("inspect-checkpoint")
@click.argument("path", type=click.Path())
@handle_errors
def inspect_checkpoint(path):
    """Print a checkpoint summary after verifying its checksum."""
    data = load_checkpoint(path)
    click.echo(f"step: {data.step}")
    click.echo(f"encoder dims: {data.online.layer_dims}")
    click.echo(f"queue: fill {data.queue.fill} / capacity {data.queue.capacity}, head {data.queue.head}")
    click.echo(f"rng: {data.rng_state.get('bit_generator', 'unknown')}")
    click.echo("crc: ok")


if __name__ == "__main__":
    main()
