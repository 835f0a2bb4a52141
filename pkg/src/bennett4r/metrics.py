"""Evaluation metrics for parameter and trajectory recovery.

Angle errors are compared on the circle: differences are wrapped into
(-pi, pi] before taking magnitudes, so 0.1 and 2*pi - 0.1 count as 0.2
apart, not 6.08.  The parameter score is the plain arithmetic mean of
the a12 and alpha12 mean absolute errors; trajectory and velocity
scores are per-coordinate L1 means averaged over samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(delta):
    """Wrap an angle difference into the half-open interval (-pi, pi].

    Scalar or array input.  The boundary maps to the closed end, so both
    +pi and -pi come back as +pi.
    """
    wrapped = np.mod(np.asarray(delta, dtype=float) + math.pi, TWO_PI) - math.pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    if np.ndim(delta) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate scores over one matched prediction/ground-truth set.

    param_mae is always exactly (a12_mae + alpha12_mae) / 2.  The
    trajectory scores are None when the predictions carried no
    trajectories (or velocities) to compare.
    """

    n: int
    a12_mae: float
    alpha12_mae: float
    param_mae: float
    traj_mae: float | None
    vel_mae: float | None


def _l1_mean(pred_arrays: list[np.ndarray], gt_arrays: list[np.ndarray]) -> float:
    per_sample = np.array([
        np.abs(np.asarray(p, dtype=float) - np.asarray(g, dtype=float)).sum() / np.asarray(g).size
        for p, g in zip(pred_arrays, gt_arrays)
    ])
    return float(per_sample.mean())


def _optional_field(preds: Sequence, name: str) -> bool:
    present = [getattr(p, name, None) is not None for p in preds]
    if any(present) and not all(present):
        raise ValueError(f"{name} must be given for all predictions or none")
    return all(present)


def evaluate(preds: Sequence, gts: Sequence) -> MetricsReport:
    """Score predictions against matched ground-truth samples.

    Inputs are parallel sequences (the caller resolves ids).  Each
    prediction exposes a12_hat, alpha12_hat and optionally trajectory /
    velocities arrays; each ground truth exposes a12, alpha12, positions
    and velocities.  Accumulation order is fixed by input order, so the
    same inputs always reduce to bit-identical scores.
    """
    if len(preds) != len(gts):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(gts)} truths")
    if not preds:
        raise ValueError("cannot evaluate an empty set")

    a12_err = np.array([abs(p.a12_hat - g.a12) for p, g in zip(preds, gts)])
    alpha_err = np.abs(wrap_angle(np.array(
        [p.alpha12_hat - g.alpha12 for p, g in zip(preds, gts)]
    )))
    a12_mae = float(a12_err.mean())
    alpha12_mae = float(alpha_err.mean())

    traj_mae = None
    if _optional_field(preds, "trajectory"):
        traj_mae = _l1_mean([p.trajectory for p in preds], [g.positions for g in gts])
    vel_mae = None
    if _optional_field(preds, "velocities"):
        vel_mae = _l1_mean([p.velocities for p in preds], [g.velocities for g in gts])

    return MetricsReport(
        n=len(preds),
        a12_mae=a12_mae,
        alpha12_mae=alpha12_mae,
        param_mae=(a12_mae + alpha12_mae) / 2.0,
        traj_mae=traj_mae,
        vel_mae=vel_mae,
    )
