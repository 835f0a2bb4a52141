"""Single-process training: AdamW under a linear warm-up into cosine decay.

The log-variance task weights are optimized jointly with the network
but excluded from weight decay, since decaying them would drag the
balance back toward its starting point.  Everything is deterministic
given the seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from .data import WaypointDataset
from .losses import TaskWeights, loss_total
from .model import ModelConfig, OConNet


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; the defaults are the desk-scale reference."""

    epochs: int = 20
    batch_size: int = 128
    peak_lr: float = 3e-4
    warmup_fraction: float = 0.05
    weight_decay: float = 0.01
    lambda_aux: float = 10.0
    lambda_sc: float = 1.0
    s_init: tuple[float, float, float] = (0.0, 0.0, -2.0)
    seed: int = 0


def lr_factor(step: int, total_steps: int, warmup_fraction: float) -> float:
    """Schedule multiplier: linear ramp, then a half-cosine down to zero."""
    warm = max(1, round(warmup_fraction * total_steps))
    if step < warm:
        return (step + 1) / warm
    progress = (step - warm) / max(1, total_steps - warm)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass(frozen=True)
class TrainingResult:
    checkpoint_path: Path
    epoch_log: list[dict]


def train(
    dataset_path: Path | str,
    out_path: Path | str,
    model_cfg: ModelConfig | None = None,
    cfg: TrainConfig | None = None,
) -> TrainingResult:
    """Fit a fresh model on the train split and write a checkpoint.

    The epoch log holds the mean per-term losses of each epoch.  A
    non-finite loss aborts immediately rather than training onward on
    garbage.
    """
    model_cfg = model_cfg or ModelConfig()
    cfg = cfg or TrainConfig()
    data = WaypointDataset.from_file(dataset_path, split="train")

    torch.manual_seed(cfg.seed)
    model = OConNet(model_cfg)
    weights = TaskWeights(*cfg.s_init)
    optimizer = torch.optim.AdamW(
        [
            {"params": model.parameters()},
            {"params": weights.parameters(), "weight_decay": 0.0},
        ],
        lr=cfg.peak_lr,
        weight_decay=cfg.weight_decay,
    )
    steps_per_epoch = math.ceil(len(data) / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: lr_factor(step, total_steps, cfg.warmup_fraction)
    )

    shuffler = torch.Generator().manual_seed(cfg.seed)
    epoch_log: list[dict] = []
    for epoch in range(cfg.epochs):
        model.train()
        sums: dict[str, float] = {}
        count = 0
        for batch in data.batches(cfg.batch_size, generator=shuffler, shuffle=True):
            optimizer.zero_grad()
            outputs = model(batch.waypoints)
            total, parts = loss_total(
                outputs, batch, weights, cfg.lambda_aux, cfg.lambda_sc, model_cfg.a_max
            )
            if not math.isfinite(parts["total"]):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}: {parts}"
                )
            total.backward()
            optimizer.step()
            scheduler.step()
            for key, value in parts.items():
                sums[key] = sums.get(key, 0.0) + value
            count += 1
        epoch_log.append(
            {"epoch": epoch, **{key: value / count for key, value in sums.items()}}
        )

    out_path = Path(out_path)
    torch.save(
        {
            "model_config": asdict(model_cfg),
            "train_config": asdict(cfg),
            "model": model.state_dict(),
            "task_weights": weights.state_dict(),
            "epoch_log": epoch_log,
        },
        out_path,
    )
    return TrainingResult(checkpoint_path=out_path, epoch_log=epoch_log)


def load_checkpoint(path: Path | str) -> tuple[OConNet, TaskWeights, dict]:
    """Rebuild the model and task weights saved by train()."""
    blob = torch.load(path, map_location="cpu")
    model = OConNet(ModelConfig(**blob["model_config"]))
    model.load_state_dict(blob["model"])
    weights = TaskWeights()
    weights.load_state_dict(blob["task_weights"])
    return model, weights, blob
