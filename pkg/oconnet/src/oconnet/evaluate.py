"""Checkpoint evaluation: predictions out, scores back.

Predictions are written as line-delimited JSON records the engine's
eval command consumes directly.  The scoring here reimplements the
shared metric formulas in plain Python so the two components can be
cross-checked against each other on the same files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import torch

from .data import WaypointDataset, read_rows, row_id
from .model import OConNet, decode_params

TWO_PI = 2.0 * math.pi


def predict(model: OConNet, data: WaypointDataset, batch_size: int = 256) -> list[dict]:
    """Run the model over a dataset split; one record dict per sample."""
    model.eval()
    records: list[dict] = []
    with torch.inference_mode():
        for batch in data.batches(batch_size):
            outputs = model(batch.waypoints)
            a12_hat, alpha12_hat = decode_params(outputs.merged, model.cfg.a_max)
            for k, sample_id in enumerate(batch.ids):
                records.append(
                    {
                        "id": sample_id,
                        "a12_hat": float(a12_hat[k]),
                        "alpha12_hat": float(alpha12_hat[k]),
                        "trajectory": outputs.trajectory[k].tolist(),
                        "velocities": outputs.velocities[k].tolist(),
                    }
                )
    return records


def write_predictions(path: Path | str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":")))
            fh.write("\n")


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate scores; param_mae is exactly (a12_mae + alpha12_mae) / 2."""

    n: int
    a12_mae: float
    alpha12_mae: float
    param_mae: float
    traj_mae: float | None
    vel_mae: float | None


def wrap_angle(delta: float) -> float:
    """Wrap an angle difference into (-pi, pi]; both edges come back as +pi."""
    wrapped = (delta + math.pi) % TWO_PI - math.pi
    return math.pi if wrapped == -math.pi else wrapped


def _mean_abs_gap(pred: list, target: list) -> float:
    flat_pred = [x for frame in pred for x in frame]
    flat_target = [x for frame in target for x in frame]
    return sum(abs(p - t) for p, t in zip(flat_pred, flat_target)) / len(flat_target)


def evaluate_records(predictions: list[dict], truths: list[dict]) -> MetricsReport:
    """Score matched prediction/truth record pairs.

    The sequences are parallel (the caller resolves ids).  Trajectories
    and velocities are scored only when every prediction carries them;
    a mixed file is an error, matching the engine's behaviour.
    """
    if len(predictions) != len(truths):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions, {len(truths)} truths"
        )
    if not predictions:
        raise ValueError("cannot evaluate an empty set")

    n = len(predictions)
    a12_mae = sum(abs(p["a12_hat"] - t["a12"]) for p, t in zip(predictions, truths)) / n
    alpha12_mae = (
        sum(abs(wrap_angle(p["alpha12_hat"] - t["alpha12"])) for p, t in zip(predictions, truths))
        / n
    )

    def optional(name: str, target_name: str) -> float | None:
        present = [name in p for p in predictions]
        if any(present) and not all(present):
            raise ValueError(f"{name} must be given for all predictions or none")
        if not all(present):
            return None
        return (
            sum(_mean_abs_gap(p[name], t[target_name]) for p, t in zip(predictions, truths)) / n
        )

    return MetricsReport(
        n=n,
        a12_mae=a12_mae,
        alpha12_mae=alpha12_mae,
        param_mae=(a12_mae + alpha12_mae) / 2.0,
        traj_mae=optional("trajectory", "positions"),
        vel_mae=optional("velocities", "velocities"),
    )


def score_files(pred_path: Path | str, gt_path: Path | str) -> MetricsReport:
    """Evaluate a prediction file against a dataset file, joined by id."""
    predictions = read_rows(pred_path)
    truths = {row_id(row): row for row in read_rows(gt_path)}
    matched = []
    for prediction in predictions:
        if prediction["id"] not in truths:
            raise ValueError(f"prediction id {prediction['id']!r} not present in {gt_path}")
        matched.append(truths[prediction["id"]])
    return evaluate_records(predictions, matched)


def metrics_to_json(report: MetricsReport) -> str:
    """Render a report with 17-significant-digit floats for exact interchange."""
    def fmt(value):
        if value is None:
            return "null"
        return format(value, ".17g")

    parts = [
        f'"n":{report.n}',
        f'"a12_mae":{fmt(report.a12_mae)}',
        f'"alpha12_mae":{fmt(report.alpha12_mae)}',
        f'"param_mae":{fmt(report.param_mae)}',
        f'"traj_mae":{fmt(report.traj_mae)}',
        f'"vel_mae":{fmt(report.vel_mae)}',
    ]
    return "{" + ",".join(parts) + "}"
