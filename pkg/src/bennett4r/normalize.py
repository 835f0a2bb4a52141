"""Two-stage rescaling of generated samples into network coordinates.

Stage 1 multiplies every length-bearing quantity of a sample by 1/a23,
pinning the second link to exactly 1.0 and letting a12 carry the shape
information alone.  Stage 2 divides a12, positions and velocities by a
robust workspace radius, the nearest-rank 99th percentile of per-point
position norms over the training split, bringing the vast majority of
coordinates into [-1, 1].  Twists, speed ratios and the unit a23 are
left alone by stage 2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Sample

logger = logging.getLogger(__name__)

SPLIT_RATIO = 0.8


def stage1_scale(sample: Sample) -> Sample:
    """Rescale one sample so its a23 becomes exactly 1.0.

    Positions, velocities and the waypoint position/velocity columns all
    carry the same factor 1/a23; speed ratios are scale-free and the
    twists are untouched, so the sine proportionality between links
    survives the rescale.
    """
    kappa = 1.0 / sample.a23
    waypoints = sample.waypoints.copy()
    waypoints[:, :6] *= kappa
    return replace(
        sample,
        a12=sample.a12 * kappa,
        a23=1.0,
        positions=sample.positions * kappa,
        velocities=sample.velocities * kappa,
        waypoints=waypoints,
    )


def compute_c99(samples: list[Sample]) -> float:
    """Nearest-rank 99th percentile of per-point position norms.

    All trajectory points of all given samples are pooled; the value at
    rank ceil(0.99 * n) of the ascending norms is returned (never an
    interpolated value, so it is always an actually attained norm).
    """
    if not samples:
        raise ValueError("need at least one sample to compute the percentile")
    norms = np.concatenate([
        np.linalg.norm(s.positions, axis=1) for s in samples
    ])
    norms.sort()
    rank = math.ceil(0.99 * norms.size)
    return float(norms[rank - 1])


def stage2_scale(sample: Sample, c99: float) -> Sample:
    """Divide a12, positions and velocities by the workspace radius c99."""
    if c99 <= 0.0:
        raise ValueError("c99 must be positive")
    waypoints = sample.waypoints.copy()
    waypoints[:, :6] /= c99
    return replace(
        sample,
        a12=sample.a12 / c99,
        positions=sample.positions / c99,
        velocities=sample.velocities / c99,
        waypoints=waypoints,
    )


def split_indices(n: int, seed: int, ratio: float = SPLIT_RATIO) -> tuple[list[int], list[int]]:
    """Deterministic train/validation index split by seeded shuffle."""
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(n * ratio)
    return sorted(int(i) for i in perm[:n_train]), sorted(int(i) for i in perm[n_train:])


@dataclass(frozen=True)
class NormalizationResult:
    """Normalized samples plus everything needed to reproduce the run."""

    samples: list[Sample]
    c99: float
    c99_auto: bool
    split_seed: int
    split_ratio: float
    train_indices: list[int]
    val_indices: list[int]


def normalize_dataset(
    samples: list[Sample], split_seed: int, c99: float | None = None
) -> NormalizationResult:
    """Apply both stages to a whole dataset.

    The split is drawn first so that an auto-computed c99 sees only
    training trajectories (after stage 1, whose per-sample factor does
    not depend on the split).  Passing an explicit c99 skips the
    estimate and reuses a previously published radius.
    """
    train_idx, val_idx = split_indices(len(samples), split_seed)
    staged = [stage1_scale(s) for s in samples]
    auto = c99 is None
    if auto:
        c99 = compute_c99([staged[i] for i in train_idx])
        logger.info("auto workspace radius c99 = %.6g", c99)
    normalized = [stage2_scale(s, c99) for s in staged]
    return NormalizationResult(
        samples=normalized,
        c99=float(c99),
        c99_auto=auto,
        split_seed=split_seed,
        split_ratio=SPLIT_RATIO,
        train_indices=train_idx,
        val_indices=val_idx,
    )
