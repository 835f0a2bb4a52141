"""Turning raw sweep positions into clean, fixed-size trajectories.

The sweep leaves a periodic sequence of third-joint positions with
occasional gaps at unconverged frames.  Processing runs in a fixed
order: gaps are filled by periodic linear interpolation, the trajectory
is low-passed by zeroing DFT harmonics above a cutoff, a jump gate
rejects sequences that still contain discontinuities, and survivors are
subsampled to 64 points with spectral-grade smoothness for velocity
estimation by central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Waypoint source rows of the 64-point trajectory: floor(k * 64 / 3).
WAYPOINT_INDICES = (0, 21, 42)


def fill_gaps(
    points: np.ndarray, converged: np.ndarray, min_fraction: float = 0.8
) -> np.ndarray:
    """Fill unconverged frames by periodic linear interpolation.

    Each gap is bridged between its nearest converged neighbours in
    drive angle, wrapping across the sequence boundary.  Fully converged
    input is returned as an exact copy.  Interpolation is only honest on
    sweeps that mostly converged, so inputs below min_fraction (the
    assemblability threshold that should have rejected them) are refused.

    Args:
        points: (n, 3) positions; rows at unconverged frames are ignored.
        converged: (n,) boolean mask.
        min_fraction: least acceptable converged fraction.
    """
    points = np.asarray(points, dtype=float)
    converged = np.asarray(converged, dtype=bool)
    n = points.shape[0]
    fraction = converged.mean() if n else 0.0
    if fraction < min_fraction:
        raise ValueError(
            f"converged fraction {fraction:.3f} is below {min_fraction:.3f}; "
            "such sweeps must be rejected, not interpolated"
        )
    if converged.all():
        return points.copy()
    if not converged.any():
        raise ValueError("cannot interpolate a trajectory with no converged frames")
    idx = np.flatnonzero(converged)
    # Pad one period on both sides so interpolation wraps.
    xp = np.concatenate(([idx[-1] - n], idx, [idx[0] + n]))
    out = np.empty_like(points)
    xs = np.arange(n)
    for axis in range(3):
        fp = points[idx, axis]
        out[:, axis] = np.interp(xs, xp, np.concatenate(([fp[-1]], fp, [fp[0]])))
    out[idx] = points[idx]
    return out


@dataclass(frozen=True)
class FilteredTrajectory:
    """Low-passed periodic trajectory plus its jump statistics.

    sigma is the standard deviation of the inter-frame displacement
    vectors (root mean squared deviation from the mean displacement,
    which is zero for a closed curve); max_jump is the largest
    inter-frame displacement norm.  Both include the wrap-around pair.
    """

    points: np.ndarray
    fc: int
    max_jump: float
    sigma: float


def _jump_stats(points: np.ndarray) -> tuple[float, float]:
    deltas = np.roll(points, -1, axis=0) - points
    norms = np.linalg.norm(deltas, axis=1)
    mean = deltas.mean(axis=0)
    sigma = math.sqrt(float(np.mean(np.sum((deltas - mean) ** 2, axis=1))))
    return float(norms.max()), sigma


def lowpass_dft(points: np.ndarray, fc: int) -> FilteredTrajectory:
    """Zero all DFT harmonics above fc, per coordinate axis.

    Harmonics 0..fc survive untouched (the DC term in particular, so
    the trajectory mean is preserved); everything higher is removed.
    Applying the same cutoff twice is a no-op.
    """
    points = np.asarray(points, dtype=float)
    if fc < 0:
        raise ValueError("cutoff harmonic must be non-negative")
    if fc >= points.shape[0] // 2:
        raise ValueError(
            f"cutoff {fc} at or above the Nyquist harmonic "
            f"{points.shape[0] // 2} would filter nothing"
        )
    spectrum = np.fft.rfft(points, axis=0)
    spectrum[fc + 1:] = 0.0
    filtered = np.fft.irfft(spectrum, n=points.shape[0], axis=0)
    max_jump, sigma = _jump_stats(filtered)
    return FilteredTrajectory(points=filtered, fc=fc, max_jump=max_jump, sigma=sigma)


@dataclass(frozen=True)
class Gate3Result:
    """Outcome of the inter-frame jump gate."""

    passed: bool
    max_jump: float
    tau: float


def gate3_check(traj: FilteredTrajectory) -> Gate3Result:
    """Reject trajectories whose largest inter-frame jump exceeds 3*sigma.

    A uniform sampling of a smooth closed curve passes comfortably; a
    single displaced frame inflates max_jump far beyond the displacement
    spread and trips the gate.  Trajectories of at most two frames pass
    by convention (no meaningful spread exists).
    """
    tau = 3.0 * traj.sigma
    if traj.points.shape[0] <= 2:
        return Gate3Result(passed=True, max_jump=traj.max_jump, tau=tau)
    return Gate3Result(passed=traj.max_jump <= tau, max_jump=traj.max_jump, tau=tau)


def subsample64(points: np.ndarray, count: int = 64) -> np.ndarray:
    """Pick `count` rows at indices floor(k * n / count).

    The default reduces a 360-frame revolution to 64 evenly strided
    samples, keeping frame 0.
    """
    points = np.asarray(points)
    n = points.shape[0]
    if n < count:
        raise ValueError(f"need at least {count} frames, got {n}")
    idx = (np.arange(count) * n) // count
    return points[idx].copy()


def central_diff_velocity(points: np.ndarray) -> np.ndarray:
    """Periodic central-difference velocities on the subsampled loop.

    The step is the drive-angle spacing 2*pi/n, so velocities are
    derivatives with respect to the drive angle, not time.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    delta = TWO_PI / n
    return (np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)) / (2.0 * delta)


@dataclass(frozen=True)
class ProcessedTrajectory:
    """Fixed-size trajectory with velocities and relative speed profile.

    speed_ratios holds per-frame speed divided by the peak speed, so its
    maximum is exactly 1 at the fastest frame (all zeros for a
    degenerate motionless trajectory).
    """

    positions: np.ndarray
    velocities: np.ndarray
    speed_ratios: np.ndarray


def process_points(points: np.ndarray) -> ProcessedTrajectory:
    """Velocities and speed profile for an already-subsampled loop."""
    velocities = central_diff_velocity(points)
    speeds = np.linalg.norm(velocities, axis=1)
    peak = speeds.max()
    ratios = speeds / peak if peak > 0.0 else np.zeros_like(speeds)
    return ProcessedTrajectory(
        positions=np.asarray(points, dtype=float).copy(),
        velocities=velocities,
        speed_ratios=ratios,
    )


def extract_waypoints(traj: ProcessedTrajectory) -> np.ndarray:
    """Three 7-vector waypoints: position, velocity, speed ratio.

    Rows are taken at trajectory indices {0, 21, 42} (thirds of the 64
    point loop, floored); columns are (px, py, pz, vx, vy, vz, r).
    """
    n = traj.positions.shape[0]
    rows = []
    for k in WAYPOINT_INDICES:
        if k >= n:
            raise ValueError(f"waypoint index {k} outside trajectory of {n} points")
        rows.append(np.concatenate([
            traj.positions[k],
            traj.velocities[k],
            [traj.speed_ratios[k]],
        ]))
    return np.stack(rows)
