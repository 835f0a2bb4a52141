"""Reading engine-emitted datasets into training tensors.

The interchange format is line-delimited JSON with a companion manifest
(dataset.jsonl / dataset.manifest.json).  Each record carries three
7-feature waypoint states, a 64-frame trajectory and velocity field,
and the two design parameters in the normalized convention.  Only
normalized files are accepted: the model's output ranges and the log
terms in the loss assume that convention, so training on raw data
would be silently wrong.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import torch
from torch import Tensor


@dataclass(frozen=True)
class Batch:
    """Shapes: waypoints B x 3 x 7, trajectory/velocities B x 64 x 3, params B."""

    waypoints: Tensor
    trajectory: Tensor
    velocities: Tensor
    a12: Tensor
    alpha12: Tensor
    ids: tuple[str, ...]


def manifest_path_for(dataset_path: Path | str) -> Path:
    """Companion manifest path: dataset.jsonl -> dataset.manifest.json."""
    p = Path(dataset_path)
    return p.with_name(p.stem + ".manifest.json")


def read_rows(path: Path | str) -> list[dict]:
    """All JSON records of one dataset file, in file order."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def row_id(row: dict) -> str:
    """Stable identifier shared with the engine, like "17-204"."""
    i, j = row["grid_index"]
    return f"{i}-{j}"


class WaypointDataset:
    """In-memory tensor view of one split of a normalized dataset."""

    def __init__(
        self,
        waypoints: Tensor,
        trajectory: Tensor,
        velocities: Tensor,
        a12: Tensor,
        alpha12: Tensor,
        ids: tuple[str, ...],
    ) -> None:
        self.waypoints = waypoints
        self.trajectory = trajectory
        self.velocities = velocities
        self.a12 = a12
        self.alpha12 = alpha12
        self.ids = ids

    def __len__(self) -> int:
        return self.waypoints.shape[0]

    @classmethod
    def from_file(cls, path: Path | str, split: str = "train") -> "WaypointDataset":
        """Load the train, val or all split as described by the manifest."""
        manifest_path = manifest_path_for(path)
        if not manifest_path.exists():
            raise ValueError(f"no manifest next to {path}; expected {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if not manifest.get("normalized", False):
            raise ValueError(
                f"{path} is not normalized; refusing to use it (the model's "
                "target convention requires normalized parameters)"
            )
        rows = read_rows(path)
        if split == "all":
            indices = list(range(len(rows)))
        elif split in ("train", "val"):
            indices = manifest["split"][f"{split}_indices"]
        else:
            raise ValueError(f"split must be train, val or all, got {split!r}")

        chosen = [rows[i] for i in indices]
        waypoints = torch.tensor([r["waypoints"] for r in chosen], dtype=torch.float32)
        trajectory = torch.tensor([r["positions"] for r in chosen], dtype=torch.float32)
        velocities = torch.tensor([r["velocities"] for r in chosen], dtype=torch.float32)
        if waypoints.shape[1:] != (3, 7) or trajectory.shape[1:] != (64, 3):
            raise ValueError(
                f"unexpected record shapes in {path}: waypoints "
                f"{tuple(waypoints.shape[1:])}, positions {tuple(trajectory.shape[1:])}"
            )
        return cls(
            waypoints=waypoints,
            trajectory=trajectory,
            velocities=velocities,
            a12=torch.tensor([r["a12"] for r in chosen], dtype=torch.float32),
            alpha12=torch.tensor([r["alpha12"] for r in chosen], dtype=torch.float32),
            ids=tuple(row_id(r) for r in chosen),
        )

    def batches(
        self,
        batch_size: int,
        generator: torch.Generator | None = None,
        shuffle: bool = False,
    ) -> Iterator[Batch]:
        """Yield minibatches, optionally in a generator-seeded random order."""
        if shuffle:
            order = torch.randperm(len(self), generator=generator)
        else:
            order = torch.arange(len(self))
        for start in range(0, len(self), batch_size):
            idx = order[start : start + batch_size]
            yield Batch(
                waypoints=self.waypoints[idx],
                trajectory=self.trajectory[idx],
                velocities=self.velocities[idx],
                a12=self.a12[idx],
                alpha12=self.alpha12[idx],
                ids=tuple(self.ids[i] for i in idx.tolist()),
            )
