"""On-disk formats: sample and prediction JSONL, manifests, CSV export.

One JSON object per line, keys in a fixed order, floats rendered by
Python's shortest round-trip repr; identical data therefore always
serialises to identical bytes.  Metric reports are the one exception to
shortest-repr: their floats are written with 17 significant digits so a
reimplementation in another language can compare bit-for-bit after
parsing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .dataset import GateReport, GenerationConfig, Sample
from .metrics import MetricsReport
from .normalize import NormalizationResult

_COMPACT = {"separators": (",", ":")}


def sample_id(sample: Sample) -> str:
    """Stable identifier derived from the grid position, like "17-204"."""
    i, j = sample.grid_index
    return f"{i}-{j}"


def sample_to_obj(sample: Sample) -> dict:
    return {
        "grid_index": [sample.grid_index[0], sample.grid_index[1]],
        "a12": sample.a12,
        "alpha12": sample.alpha12,
        "a23": sample.a23,
        "alpha23": sample.alpha23,
        "converged_fraction": sample.converged_fraction,
        "positions": sample.positions.tolist(),
        "velocities": sample.velocities.tolist(),
        "waypoints": sample.waypoints.tolist(),
    }


def obj_to_sample(obj: dict) -> Sample:
    positions = np.asarray(obj["positions"], dtype=float)
    velocities = np.asarray(obj["velocities"], dtype=float)
    waypoints = np.asarray(obj["waypoints"], dtype=float)
    if positions.shape != velocities.shape or positions.ndim != 2 or positions.shape[1] != 3:
        raise ValueError("positions/velocities must both be (n, 3)")
    if waypoints.shape != (3, 7):
        raise ValueError(f"waypoints must be (3, 7), got {waypoints.shape}")
    return Sample(
        grid_index=(int(obj["grid_index"][0]), int(obj["grid_index"][1])),
        a12=float(obj["a12"]),
        alpha12=float(obj["alpha12"]),
        a23=float(obj["a23"]),
        alpha23=float(obj["alpha23"]),
        converged_fraction=float(obj["converged_fraction"]),
        positions=positions,
        velocities=velocities,
        waypoints=waypoints,
    )


def write_samples(path: Path | str, samples: Iterable[Sample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_obj(sample), **_COMPACT))
            fh.write("\n")


def iter_samples(path: Path | str) -> Iterator[Sample]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield obj_to_sample(json.loads(line))


def read_samples(path: Path | str) -> list[Sample]:
    return list(iter_samples(path))


@dataclass(frozen=True)
class PredictionRecord:
    """One model (or solver) output row, joined to its sample by id."""

    id: str
    a12_hat: float
    alpha12_hat: float
    trajectory: np.ndarray | None = None
    velocities: np.ndarray | None = None


def prediction_to_obj(pred: PredictionRecord) -> dict:
    obj = {"id": pred.id, "a12_hat": pred.a12_hat, "alpha12_hat": pred.alpha12_hat}
    if pred.trajectory is not None:
        obj["trajectory"] = np.asarray(pred.trajectory).tolist()
    if pred.velocities is not None:
        obj["velocities"] = np.asarray(pred.velocities).tolist()
    return obj


def obj_to_prediction(obj: dict) -> PredictionRecord:
    def _array(key):
        return np.asarray(obj[key], dtype=float) if key in obj else None

    return PredictionRecord(
        id=str(obj["id"]),
        a12_hat=float(obj["a12_hat"]),
        alpha12_hat=float(obj["alpha12_hat"]),
        trajectory=_array("trajectory"),
        velocities=_array("velocities"),
    )


def write_predictions(path: Path | str, preds: Iterable[PredictionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pred in preds:
            fh.write(json.dumps(prediction_to_obj(pred), **_COMPACT))
            fh.write("\n")


def read_predictions(path: Path | str) -> list[PredictionRecord]:
    preds = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                preds.append(obj_to_prediction(json.loads(line)))
    return preds


def manifest_path_for(dataset_path: Path | str) -> Path:
    """Companion manifest path: dataset.jsonl -> dataset.manifest.json."""
    p = Path(dataset_path)
    return p.with_name(p.stem + ".manifest.json")


def generation_manifest(cfg: GenerationConfig, report: GateReport) -> dict:
    return {
        "format": "bennett4r-dataset",
        "normalized": False,
        "generation": {
            "n_a": cfg.grid.n_a,
            "n_alpha": cfg.grid.n_alpha,
            "a_intervals": [list(iv) for iv in cfg.grid.a_intervals],
            "alpha_intervals": [list(iv) for iv in cfg.grid.alpha_intervals],
            "n_frames": cfg.n_frames,
            "fc": cfg.fc,
            "eps": cfg.solver.eps,
            "max_iter": cfg.solver.max_iter,
            "lambda0": cfg.solver.lambda0,
            "multistart": cfg.solver.multistart,
            "gate2_threshold": cfg.gate2_threshold,
        },
        "gates": {
            "candidates": report.candidates,
            "gate1_rejects": report.gate1_rejects,
            "gate2_rejects": report.gate2_rejects,
            "gate3_rejects": report.gate3_rejects,
            "accepted": report.accepted,
            "pass_rate": report.pass_rate,
        },
        "velocity_step": "central difference over drive angle, delta = 2*pi/64",
    }


def normalization_manifest(base: dict | None, result: NormalizationResult) -> dict:
    manifest = dict(base) if base else {"format": "bennett4r-dataset"}
    manifest["normalized"] = True
    manifest["normalization"] = {
        "stage1": "lengths, positions and velocities scaled by 1/a23 (a23 -> 1.0)",
        "stage2": "a12, positions and velocities divided by c99",
        "c99": result.c99,
        "c99_auto": result.c99_auto,
    }
    manifest["split"] = {
        "seed": result.split_seed,
        "ratio": result.split_ratio,
        "train_indices": result.train_indices,
        "val_indices": result.val_indices,
    }
    return manifest


def write_manifest(path: Path | str, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def read_manifest(path: Path | str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


CSV_HEADER = ["k", "px", "py", "pz", "vx", "vy", "vz"]


def write_trajectory_csv(path: Path | str, sample: Sample) -> None:
    """Per-sample delimited export of the 64-point trajectory."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for k in range(sample.positions.shape[0]):
            writer.writerow(
                [k]
                + [repr(float(v)) for v in sample.positions[k]]
                + [repr(float(v)) for v in sample.velocities[k]]
            )


def metrics_to_json(report: MetricsReport) -> str:
    """Render a metrics report with 17-significant-digit floats."""
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
