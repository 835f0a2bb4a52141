"""Loss behaviour: the exact value on perfect outputs, circular angle
handling, and finite-difference agreement of the full gradient."""

import math

import pytest
import torch

from oconnet.data import Batch
from oconnet.losses import (
    TaskWeights,
    loss_total,
    periodic_angle_loss,
    velocity_loss,
    wrap_angle,
)
from oconnet.model import TWO_PI, ModelOutputs, decode_params


def make_batch(b=2, seed=0):
    g = torch.Generator().manual_seed(seed)
    kw = {"generator": g, "dtype": torch.float64}
    return Batch(
        waypoints=torch.randn(b, 3, 7, **kw),
        trajectory=torch.randn(b, 64, 3, **kw),
        velocities=torch.randn(b, 64, 3, **kw),
        a12=torch.rand(b, **kw) * 1.4 + 0.1,
        alpha12=torch.rand(b, **kw) * TWO_PI,
        ids=tuple(str(i) for i in range(b)),
    )


def make_outputs(batch, seed=1, noise=0.3):
    g = torch.Generator().manual_seed(seed)
    kw = {"generator": g, "dtype": torch.float64}
    b = len(batch.ids)
    return ModelOutputs(
        trajectory=batch.trajectory + noise * torch.randn(b, 64, 3, **kw),
        velocities=batch.velocities + noise * torch.randn(b, 64, 3, **kw),
        shortcut=torch.randn(b, 3, **kw),
        merged=torch.randn(b, 3, **kw),
    )


def test_task_weights_start_at_the_pinned_values():
    assert TaskWeights().s.tolist() == [0.0, 0.0, -2.0]


def test_perfect_outputs_score_exactly_minus_one():
    # Targets built from exactly representable values: sigmoid(0) * 2 is 1,
    # atan2(1, 0) is pi / 2, and 3-4-0 velocity rows have norm exactly 5,
    # so every term vanishes and the log-variance offsets alone remain.
    b = 2
    trajectory = torch.randn(b, 64, 3, dtype=torch.float64)
    velocities = torch.zeros(b, 64, 3, dtype=torch.float64)
    velocities[:, :, 0] = 3.0
    velocities[:, :, 1] = 4.0
    logits = torch.tensor([[0.0, 1.0, 0.0]] * b, dtype=torch.float64)
    batch = Batch(
        waypoints=torch.zeros(b, 3, 7, dtype=torch.float64),
        trajectory=trajectory.clone(),
        velocities=velocities.clone(),
        a12=torch.ones(b, dtype=torch.float64),
        alpha12=torch.full((b,), math.pi / 2, dtype=torch.float64),
        ids=("a", "b"),
    )
    outputs = ModelOutputs(
        trajectory.clone(), velocities.clone(), logits.clone(), logits.clone()
    )
    total, parts = loss_total(outputs, batch, TaskWeights().double())
    assert parts["trajectory"] == 0.0
    assert parts["velocity"] == 0.0
    assert parts["auxiliary"] == 0.0
    assert total.item() == pytest.approx(-1.0, abs=1e-12)


def test_zero_log_variances_halve_each_term():
    batch = make_batch()
    outputs = make_outputs(batch)
    total, parts = loss_total(outputs, batch, TaskWeights(0.0, 0.0, 0.0).double())
    expected = (
        0.5 * (parts["trajectory"] + parts["velocity"] + parts["parameter"])
        + 10.0 * parts["auxiliary"]
    )
    assert total.item() == pytest.approx(expected, rel=1e-12)


def test_auxiliary_weight_scales_linearly():
    batch = make_batch()
    outputs = make_outputs(batch)
    weights = TaskWeights().double()
    bare, parts = loss_total(outputs, batch, weights, lambda_aux=0.0)
    full, _ = loss_total(outputs, batch, weights, lambda_aux=10.0)
    assert full.item() - bare.item() == pytest.approx(
        10.0 * parts["auxiliary"], rel=1e-12
    )


def test_wrap_angle_folds_full_turns():
    near = wrap_angle(torch.tensor(TWO_PI - 0.01, dtype=torch.float64))
    assert float(near) == pytest.approx(-0.01, abs=1e-12)
    assert float(wrap_angle(torch.tensor(-math.pi, dtype=torch.float64))) == math.pi
    assert float(wrap_angle(torch.tensor(math.pi, dtype=torch.float64))) == math.pi
    assert float(wrap_angle(torch.tensor(0.0, dtype=torch.float64))) == 0.0


def test_periodic_term_sees_the_short_way_around():
    near = periodic_angle_loss(torch.tensor([TWO_PI - 0.01], dtype=torch.float64))
    direct = periodic_angle_loss(torch.tensor([-0.01], dtype=torch.float64))
    assert float(near) == pytest.approx(float(direct), abs=1e-15)
    assert float(near) < 1e-4


def test_loss_is_continuous_across_the_angle_seam():
    # Sweep predictions through the 0 / 2*pi seam against a fixed target;
    # adjacent loss values must not jump.
    target = 0.3
    phases = torch.linspace(-0.2, 0.2, 2001, dtype=torch.float64)
    alpha_hat = torch.remainder(phases, TWO_PI)
    delta = alpha_hat - target
    values = torch.stack(
        [periodic_angle_loss(delta[i].reshape(1)) for i in range(delta.numel())]
    )
    steps = (values[1:] - values[:-1]).abs()
    assert float(steps.max()) < 1e-3


def test_zero_velocity_frames_stay_finite():
    g = torch.Generator().manual_seed(3)
    pred = torch.randn(1, 64, 3, generator=g, dtype=torch.float64)
    target = torch.randn(1, 64, 3, generator=g, dtype=torch.float64)
    pred[0, 9] = 0.0
    target[0, 5] = 0.0
    assert torch.isfinite(velocity_loss(pred, target))


def _is_smooth_point(merged, velocities, batch):
    """Reject sample points near any non-differentiable corner of the loss."""
    a12_hat, alpha12_hat = decode_params(merged)
    gap = wrap_angle(alpha12_hat - batch.alpha12).abs()
    if float((gap - 0.2 * math.pi).abs().min()) < 0.05:
        return False
    if float((gap - math.pi).abs().min()) < 0.05:
        return False
    if float((a12_hat - batch.a12).abs().min()) < 1e-2:
        return False
    if float(merged[:, 1:].norm(dim=-1).min()) < 0.3:
        return False
    log_gap = (
        velocities.norm(dim=-1).clamp_min(1e-8).log()
        - batch.velocities.norm(dim=-1).clamp_min(1e-8).log()
    ).abs()
    return float(log_gap.min()) >= 1e-3


def test_gradients_match_finite_differences_at_smooth_points():
    weights = TaskWeights().double()
    h = 1e-6
    checked = 0
    attempts = 0
    while checked < 10:
        attempts += 1
        assert attempts < 300, "could not find enough smooth sample points"
        batch = make_batch(b=3, seed=1000 + attempts)
        g = torch.Generator().manual_seed(2000 + attempts)
        kw = {"generator": g, "dtype": torch.float64}
        merged = 1.5 * torch.randn(3, 3, **kw)
        shortcut = torch.randn(3, 3, **kw)
        trajectory = batch.trajectory + 0.2 * torch.randn(3, 64, 3, **kw)
        velocities = 1.3 * batch.velocities + 0.1 * torch.randn(3, 64, 3, **kw)
        if not _is_smooth_point(merged, velocities, batch):
            continue

        leaves = (
            merged.clone().requires_grad_(True),
            trajectory.clone().requires_grad_(True),
            velocities.clone().requires_grad_(True),
        )
        total, _ = loss_total(
            ModelOutputs(leaves[1], leaves[2], shortcut, leaves[0]), batch, weights
        )
        grads = torch.autograd.grad(total, leaves)

        probes = [
            (0, (0, 0)),
            (0, (0, 1)),
            (0, (0, 2)),
            (1, (1, 17, 2)),
            (2, (2, 40, 0)),
        ]
        originals = (merged, trajectory, velocities)
        with torch.no_grad():
            for which, index in probes:
                plus = [t.clone() for t in originals]
                minus = [t.clone() for t in originals]
                plus[which][index] += h
                minus[which][index] -= h
                f_plus, _ = loss_total(
                    ModelOutputs(plus[1], plus[2], shortcut, plus[0]), batch, weights
                )
                f_minus, _ = loss_total(
                    ModelOutputs(minus[1], minus[2], shortcut, minus[0]), batch, weights
                )
                fd = float((f_plus - f_minus) / (2.0 * h))
                ad = float(grads[which][index])
                assert abs(fd - ad) <= 1e-8 + 1e-4 * max(abs(fd), abs(ad)), (
                    f"attempt {attempts}: finite difference {fd} vs autograd {ad} "
                    f"at tensor {which} index {index}"
                )
        checked += 1
