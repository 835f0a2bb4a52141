"""Damped least-squares solving of the Bennett loop closure.

Given a parameter set and a drive angle theta1, the three follower
angles are found by Levenberg-Marquardt iteration on the 12-component
closure residual.  A full sweep drives theta1 through one revolution,
multistarting the first frame on a coarse lattice and warm-starting
every later frame from its predecessor, which keeps the solution on one
continuous assembly branch.

Two code paths share the same update rule: a scalar loop shaped around
one frame (:func:`solve_frame`) and a vectorised batch used for the
frame-0 multistart and for continuation re-sweeps, where many closure
problems iterate side by side with individual damping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import (
    TWO_PI,
    BennettParams,
    dh_matrix,
    dh_matrix_dtheta,
    joint3_positions,
)

_LAMBDA_UP = 10.0
_LAMBDA_DOWN = 0.1

_EYE3 = np.eye(3)
_EYE4 = np.eye(4)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls for the closure solver.

    eps is the convergence threshold on the residual infinity norm,
    max_iter caps damped steps per start, lambda0 seeds the damping
    parameter, and multistart is the per-axis count of the frame-0
    start lattice (multistart**3 starts in total).
    """

    eps: float = 1e-6
    max_iter: int = 200
    lambda0: float = 1e-3
    multistart: int = 4


@dataclass(frozen=True)
class FrameSolution:
    """Solved follower angles for one drive angle.

    thetas holds (theta2, theta3, theta4) canonicalised to [0, 2*pi);
    residual_norm is the infinity norm of the closure residual at those
    angles and converged records whether it met the solver tolerance.
    """

    theta1: float
    thetas: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class RawSweep:
    """One full drive revolution of closure solutions."""

    params: BennettParams
    frames: list[FrameSolution]
    converged_fraction: float

    def theta1s(self) -> np.ndarray:
        return np.array([f.theta1 for f in self.frames])

    def theta_matrix(self) -> np.ndarray:
        """Follower angles stacked to (n_frames, 3)."""
        return np.array([f.thetas for f in self.frames])

    def converged_mask(self) -> np.ndarray:
        return np.array([f.converged for f in self.frames], dtype=bool)

    def positions(self) -> np.ndarray:
        """Third-joint workspace positions for every frame, (n_frames, 3).

        Entries at unconverged frames are evaluated at the solver's last
        iterate and should be treated as gaps.
        """
        th1 = self.theta1s()
        th2 = self.theta_matrix()[:, 0]
        return joint3_positions(self.params, th1, th2)


def _residual_jacobian(
    t1: np.ndarray, th: np.ndarray, params: BennettParams
) -> tuple[np.ndarray, np.ndarray]:
    """Closure residual and its 12x3 Jacobian at follower angles th."""
    t2 = dh_matrix(th[0], params.a23, params.alpha23)
    t3 = dh_matrix(th[1], params.a12, params.alpha12)
    t4 = dh_matrix(th[2], params.a23, params.alpha23)
    a = t1 @ t2
    b = a @ t3
    full = b @ t4
    r = (full - _EYE4)[:3, :].ravel()

    d2 = dh_matrix_dtheta(th[0], params.a23, params.alpha23)
    d3 = dh_matrix_dtheta(th[1], params.a12, params.alpha12)
    d4 = dh_matrix_dtheta(th[2], params.a23, params.alpha23)
    t34 = t3 @ t4
    jac = np.empty((12, 3))
    jac[:, 0] = (t1 @ d2 @ t34)[:3, :].ravel()
    jac[:, 1] = (a @ d3 @ t4)[:3, :].ravel()
    jac[:, 2] = (b @ d4)[:3, :].ravel()
    return r, jac


def solve_frame(
    params: BennettParams, theta1: float, start: tuple[float, float, float],
    cfg: SolverConfig,
) -> FrameSolution:
    """Solve one closure problem from a single start.

    Classic Levenberg-Marquardt: the damped normal equations give a
    step, accepted when it lowers the squared residual (damping / 10)
    and rejected otherwise (damping * 10).  Iterations stop once the
    residual infinity norm drops to cfg.eps or cfg.max_iter steps were
    attempted.
    """
    t1 = dh_matrix(theta1, params.a12, params.alpha12)
    th = np.asarray(start, dtype=float)
    r, jac = _residual_jacobian(t1, th, params)
    cost = float(r @ r)
    lam = cfg.lambda0
    iterations = 0
    while iterations < cfg.max_iter and np.max(np.abs(r)) > cfg.eps:
        lhs = jac.T @ jac + lam * _EYE3
        rhs = jac.T @ r
        step = np.linalg.solve(lhs, -rhs)
        th_new = th + step
        r_new, jac_new = _residual_jacobian(t1, th_new, params)
        cost_new = float(r_new @ r_new)
        if cost_new < cost:
            th, r, jac, cost = th_new, r_new, jac_new, cost_new
            lam *= _LAMBDA_DOWN
        else:
            lam *= _LAMBDA_UP
        iterations += 1
    norm = float(np.max(np.abs(r)))
    return FrameSolution(
        theta1=theta1,
        thetas=th % TWO_PI,
        residual_norm=norm,
        converged=norm <= cfg.eps,
        iterations=iterations,
    )


def _dh_batch(th: np.ndarray, a: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Stacked link transforms and their theta derivatives, (B, 4, 4)."""
    ct, st = np.cos(th), np.sin(th)
    ca, sa = math.cos(alpha), math.sin(alpha)
    n = th.shape[0]
    t = np.zeros((n, 4, 4))
    t[:, 0, 0] = ct
    t[:, 0, 1] = -st * ca
    t[:, 0, 2] = st * sa
    t[:, 0, 3] = a * ct
    t[:, 1, 0] = st
    t[:, 1, 1] = ct * ca
    t[:, 1, 2] = -ct * sa
    t[:, 1, 3] = a * st
    t[:, 2, 1] = sa
    t[:, 2, 2] = ca
    t[:, 3, 3] = 1.0
    d = np.zeros((n, 4, 4))
    d[:, 0, 0] = -st
    d[:, 0, 1] = -ct * ca
    d[:, 0, 2] = ct * sa
    d[:, 0, 3] = -a * st
    d[:, 1, 0] = ct
    d[:, 1, 1] = -st * ca
    d[:, 1, 2] = st * sa
    d[:, 1, 3] = a * ct
    return t, d


def _batch_residual_jacobian(
    t1: np.ndarray, th: np.ndarray, params: BennettParams
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised residuals (B, 12) and Jacobians (B, 12, 3)."""
    t2, d2 = _dh_batch(th[:, 0], params.a23, params.alpha23)
    t3, d3 = _dh_batch(th[:, 1], params.a12, params.alpha12)
    t4, d4 = _dh_batch(th[:, 2], params.a23, params.alpha23)
    a = t1 @ t2
    b = a @ t3
    full = b @ t4
    n = th.shape[0]
    r = (full - _EYE4)[:, :3, :].reshape(n, 12)
    t34 = t3 @ t4
    jac = np.empty((n, 12, 3))
    jac[:, :, 0] = (t1 @ d2 @ t34)[:, :3, :].reshape(n, 12)
    jac[:, :, 1] = (a @ d3 @ t4)[:, :3, :].reshape(n, 12)
    jac[:, :, 2] = (b @ d4)[:, :3, :].reshape(n, 12)
    return r, jac


def _lm_batch(
    t1s: np.ndarray, starts: np.ndarray, params: BennettParams, cfg: SolverConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the LM update on a batch of closure problems side by side.

    Each problem keeps its own damping parameter and stops iterating as
    soon as it converges; the batch is compacted to the still-active
    subset every round.  Returns (thetas, residual_norms, iterations)
    with thetas left uncanonicalised.
    """
    n = starts.shape[0]
    th = starts.astype(float).copy()
    r, jac = _batch_residual_jacobian(t1s, th, params)
    cost = np.einsum("bi,bi->b", r, r)
    norms = np.max(np.abs(r), axis=1)
    lam = np.full(n, cfg.lambda0)
    iters = np.zeros(n, dtype=int)
    active = np.flatnonzero(norms > cfg.eps)

    rounds = 0
    while active.size and rounds < cfg.max_iter:
        rounds += 1
        t1a = t1s[active]
        tha = th[active]
        ra = r[active]
        ja = jac[active]
        jtj = np.einsum("bri,brj->bij", ja, ja)
        g = np.einsum("bri,br->bi", ja, ra)
        lhs = jtj + lam[active, None, None] * _EYE3
        step = np.linalg.solve(lhs, -g[..., None])[..., 0]
        th_new = tha + step
        r_new, jac_new = _batch_residual_jacobian(t1a, th_new, params)
        cost_new = np.einsum("bi,bi->b", r_new, r_new)
        better = cost_new < cost[active]

        acc = active[better]
        th[acc] = th_new[better]
        r[acc] = r_new[better]
        jac[acc] = jac_new[better]
        cost[acc] = cost_new[better]
        norms[acc] = np.max(np.abs(r_new[better]), axis=1)
        lam[acc] *= _LAMBDA_DOWN
        lam[active[~better]] *= _LAMBDA_UP
        iters[active] += 1
        active = active[~(norms[active] <= cfg.eps)]

    return th, norms, iters


def _multistart_lattice(m: int) -> np.ndarray:
    """The m**3 start triples on the uniform lattice over [0, 2*pi)**3."""
    axis = TWO_PI * np.arange(m) / m
    grid = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def solve_frame_multistart(
    params: BennettParams, theta1: float, cfg: SolverConfig
) -> FrameSolution:
    """Solve one frame from the full start lattice, keeping the winner.

    All lattice starts are iterated to completion and the one with the
    lowest final residual norm wins; ties resolve to the earliest start
    in lattice order, which keeps the outcome reproducible.
    """
    starts = _multistart_lattice(cfg.multistart)
    t1 = dh_matrix(theta1, params.a12, params.alpha12)
    t1s = np.broadcast_to(t1, (starts.shape[0], 4, 4))
    th, norms, iters = _lm_batch(t1s, starts, params, cfg)
    norms = np.where(np.isfinite(norms), norms, np.inf)
    win = int(np.argmin(norms))
    norm = float(norms[win])
    return FrameSolution(
        theta1=theta1,
        thetas=th[win] % TWO_PI,
        residual_norm=norm,
        converged=norm <= cfg.eps,
        iterations=int(iters[win]),
    )


def sweep(
    params: BennettParams, cfg: SolverConfig, n_frames: int = 360
) -> RawSweep:
    """Solve the closure over one full revolution of the drive angle.

    Frame k sits at theta1 = 2*pi*k / n_frames.  Frame 0 is multistarted
    on the lattice; every later frame warm-starts from its predecessor's
    (canonicalised) angles, converged or not, so short convergence
    failures do not break the continuation.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be positive")
    frames: list[FrameSolution] = [solve_frame_multistart(params, 0.0, cfg)]
    for k in range(1, n_frames):
        theta1 = TWO_PI * k / n_frames
        prev = frames[-1].thetas
        frames.append(solve_frame(params, theta1, tuple(prev), cfg))
    converged = sum(f.converged for f in frames)
    return RawSweep(
        params=params,
        frames=frames,
        converged_fraction=converged / n_frames,
    )


def resweep(
    params: BennettParams,
    theta1s: np.ndarray,
    warm_thetas: np.ndarray,
    cfg: SolverConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Re-solve a whole sweep from per-frame warm starts.

    Continuation utility for evaluating a parameter set close to one
    already swept: all frames iterate as one batch from the neighbour's
    follower angles, which preserves the assembly branch without paying
    for a fresh multistart.  Returns (thetas, residual_norms, converged)
    with thetas canonicalised to [0, 2*pi).
    """
    t1s, _ = _dh_batch(np.asarray(theta1s, dtype=float), params.a12, params.alpha12)
    th, norms, _ = _lm_batch(t1s, np.asarray(warm_thetas, dtype=float), params, cfg)
    return th % TWO_PI, norms, norms <= cfg.eps
