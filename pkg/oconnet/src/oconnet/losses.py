"""Training objective: three uncertainty-weighted terms plus a fixed-weight
auxiliary term on the shortcut branch.

Each main term carries a learnable log-variance s_i and contributes
exp(-s_i) * L_i / 2 + s_i / 2, so the optimizer balances the tasks
itself.  Angles are always compared on the circle: differences wrap
into (-pi, pi] before scoring, which keeps the loss continuous across
the 0 / 2*pi seam.
"""

from __future__ import annotations

import math

import torch
from torch import Tensor, nn
from torch.nn import functional as F

from .data import Batch
from .model import TWO_PI, ModelOutputs, decode_params

NORM_FLOOR = 1e-8


class TaskWeights(nn.Module):
    """Learnable log-variances for the trajectory, velocity and parameter terms.

    The parameter entry starts at -2, giving that task a higher initial
    precision weight than the other two.
    """

    def __init__(self, s_t: float = 0.0, s_v: float = 0.0, s_p: float = -2.0) -> None:
        super().__init__()
        self.s = nn.Parameter(torch.tensor([s_t, s_v, s_p]))


def wrap_angle(delta: Tensor) -> Tensor:
    """Wrap angle differences into (-pi, pi]; the -pi edge folds to +pi."""
    wrapped = torch.remainder(delta + math.pi, TWO_PI) - math.pi
    return torch.where(wrapped == -math.pi, -wrapped, wrapped)


def periodic_angle_loss(delta: Tensor) -> Tensor:
    """Huber score of a wrapped, full-turn-scaled angle difference."""
    scaled = wrap_angle(delta) / TWO_PI
    return F.smooth_l1_loss(scaled, torch.zeros_like(scaled), beta=0.1)


def velocity_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Direction and magnitude scored separately.

    One minus the mean cosine alignment over all frames, plus an L1 gap
    between the log speed profiles.  Norms are floored at 1e-8 so a
    degenerate zero-velocity frame cannot poison the log or the ratio.
    """
    norm_pred = pred.norm(dim=-1).clamp_min(NORM_FLOOR)
    norm_target = target.norm(dim=-1).clamp_min(NORM_FLOOR)
    cosine = (pred * target).sum(dim=-1) / (norm_pred * norm_target)
    magnitude = F.l1_loss(norm_pred.log(), norm_target.log())
    return (1.0 - cosine.mean()) + magnitude


def parameter_loss(
    merged: Tensor, a12: Tensor, alpha12: Tensor, a_max: float, lambda_sc: float
) -> Tensor:
    """Four-term design-parameter score on the merged logits.

    Squared error plus a half-weight log-space L1 for the link length
    (the log term keeps small lengths from being drowned out), the
    periodic Huber term for the twist, and direct L2 supervision of the
    raw sin/cos logits, which stays smooth where atan2 is not.
    """
    a12_hat, alpha12_hat = decode_params(merged, a_max)
    length = F.mse_loss(a12_hat, a12) + 0.5 * F.l1_loss(a12_hat.log(), a12.log())
    twist = periodic_angle_loss(alpha12_hat - alpha12) + lambda_sc * (
        F.mse_loss(merged[..., 1], torch.sin(alpha12))
        + F.mse_loss(merged[..., 2], torch.cos(alpha12))
    )
    return length + twist


def auxiliary_loss(shortcut: Tensor, a12: Tensor, alpha12: Tensor, a_max: float) -> Tensor:
    """Supervision of the shortcut branch's own decoded predictions."""
    a12_sc, alpha12_sc = decode_params(shortcut, a_max)
    return F.mse_loss(a12_sc, a12) + periodic_angle_loss(alpha12_sc - alpha12)


def loss_total(
    outputs: ModelOutputs,
    batch: Batch,
    weights: TaskWeights,
    lambda_aux: float = 10.0,
    lambda_sc: float = 1.0,
    a_max: float = 2.0,
) -> tuple[Tensor, dict[str, float]]:
    """Combined training loss and a detached per-term breakdown."""
    terms = torch.stack(
        [
            F.mse_loss(outputs.trajectory, batch.trajectory),
            velocity_loss(outputs.velocities, batch.velocities),
            parameter_loss(outputs.merged, batch.a12, batch.alpha12, a_max, lambda_sc),
        ]
    )
    aux = auxiliary_loss(outputs.shortcut, batch.a12, batch.alpha12, a_max)
    total = (0.5 * torch.exp(-weights.s) * terms + 0.5 * weights.s).sum() + lambda_aux * aux
    logged = terms.detach()
    breakdown = {
        "trajectory": float(logged[0]),
        "velocity": float(logged[1]),
        "parameter": float(logged[2]),
        "auxiliary": float(aux.detach()),
        "total": float(total.detach()),
    }
    return total, breakdown
