"""Waypoint-driven recovery of Bennett design parameters.

Given three 7-vector waypoints (position, velocity, speed ratio) in the
dataset's normalized coordinates, the solver searches the feasible
(a12, alpha12) region for a mechanism whose trajectory passes through
the query positions at some common phase.  A coarse scan rates every
grid candidate at every phase offset against a library of precomputed
trajectories (one sweep per candidate, reused across all phases), then
the best seeds are polished by a derivative-free pattern search over
(a12, alpha12, phase).

Phases live on the 64-point loop parameter: index k of a processed
trajectory sits at phase 2*pi*k/64, and the three waypoints are offset
by the phases of loop indices {0, 21, 42}.  Results are reported in
post-normalization coordinates, so a12_hat is (a12/a23)/c99 with the
c99 of the dataset the waypoints came from.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import GenerationConfig, GridConfig, build_grid, run_candidate
from .kinematics import BennettParams, Gate1Rejection, derive_dependents, joint3_positions
from .solver import resweep, sweep
from .trajectory import (
    WAYPOINT_INDICES,
    fill_gaps,
    gate3_check,
    lowpass_dft,
    process_points,
    subsample64,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

INFEASIBLE = math.inf

# Loop-parameter offsets of the three waypoints.
_DELTAS = tuple(TWO_PI * k / 64 for k in WAYPOINT_INDICES)

_STEP_FLOOR = 1e-7


@dataclass(frozen=True)
class InverseConfig:
    """Search controls plus the normalization constant of the dataset.

    The coarse grid spans the same feasible region as generation;
    phase_steps divides the revolution for the scan.  c99 must match the
    Stage-2 radius of the dataset whose waypoints are being queried,
    otherwise recovered lengths come back in the wrong units.
    """

    coarse_na: int = 48
    coarse_nalpha: int = 96
    phase_steps: int = 64
    top_k: int = 5
    refine_iters: int = 100
    use_velocity: bool = False
    c99: float = 29.44


@dataclass(frozen=True)
class Finalist:
    """One refined seed, in post-normalization coordinates."""

    a12_hat: float
    alpha12_hat: float
    phase_hat: float
    objective: float


@dataclass(frozen=True)
class InverseResult:
    """Best recovered design plus all finalists for ambiguity checks."""

    a12_hat: float
    alpha12_hat: float
    phase_hat: float
    objective: float
    candidates_evaluated: int
    finalists: list[Finalist] = field(default_factory=list)


@dataclass(frozen=True)
class NoSolution:
    """Returned when no feasible candidate exists for the query."""

    candidates_evaluated: int
    reason: str


@dataclass(frozen=True)
class CandidateLibrary:
    """Precomputed normalized trajectories over the coarse grid.

    Arrays are parallel: entry m holds the raw design (a12, alpha12),
    the twist branch its sweep used, the normalized a12, the normalized
    64-point trajectory and velocities, and the full-resolution follower
    angles kept as warm starts for refinement.
    """

    a12: np.ndarray
    alpha12: np.ndarray
    branches: list[str]
    a12_norm: np.ndarray
    trajectories: np.ndarray
    velocities: np.ndarray
    thetas: np.ndarray
    theta1s: np.ndarray

    def __len__(self) -> int:
        return self.a12.shape[0]


_LIBRARY_CACHE: dict[tuple, CandidateLibrary] = {}


def _canonical_generation_config() -> GenerationConfig:
    return GenerationConfig()


def _normalize_arrays(
    params: BennettParams, positions: np.ndarray, velocities: np.ndarray, c99: float
) -> tuple[float, np.ndarray, np.ndarray]:
    kappa = 1.0 / params.a23
    factor = kappa / c99
    return params.a12 * factor, positions * factor, velocities * factor


def build_library(cfg: InverseConfig) -> CandidateLibrary:
    """Sweep every feasible coarse-grid candidate once.

    Candidates failing any generation gate are dropped.  The result is
    cached per (grid shape, c99), so repeated solves against the same
    dataset pay for the sweeps only once.
    """
    key = (cfg.coarse_na, cfg.coarse_nalpha, cfg.c99)
    cached = _LIBRARY_CACHE.get(key)
    if cached is not None:
        return cached

    gen_cfg = replace(
        _canonical_generation_config(),
        grid=GridConfig(n_a=cfg.coarse_na, n_alpha=cfg.coarse_nalpha),
    )
    grid = build_grid(gen_cfg.grid)
    logger.info("building inverse library over %d candidates", len(grid))

    a12s, alpha12s, branches = [], [], []
    a12_norm, trajs, vels, thetas = [], [], [], []
    for _, _, a12, alpha12 in grid:
        result = run_candidate(a12, alpha12, gen_cfg)
        if result.outcome != "ok":
            continue
        sample, swept = result.sample, result.swept
        params = BennettParams(
            a12=sample.a12, alpha12=sample.alpha12,
            a23=sample.a23, alpha23=sample.alpha23,
        )
        an, traj, vel = _normalize_arrays(
            params, sample.positions, sample.velocities, cfg.c99
        )
        a12s.append(sample.a12)
        alpha12s.append(sample.alpha12)
        branches.append(result.branch)
        a12_norm.append(an)
        trajs.append(traj)
        vels.append(vel)
        thetas.append(swept.theta_matrix())

    if a12s:
        theta1s = TWO_PI * np.arange(gen_cfg.n_frames) / gen_cfg.n_frames
        library = CandidateLibrary(
            a12=np.array(a12s),
            alpha12=np.array(alpha12s),
            branches=branches,
            a12_norm=np.array(a12_norm),
            trajectories=np.array(trajs),
            velocities=np.array(vels),
            thetas=np.array(thetas),
            theta1s=theta1s,
        )
    else:
        empty = np.empty((0,))
        library = CandidateLibrary(
            a12=empty, alpha12=empty, branches=[], a12_norm=empty,
            trajectories=np.empty((0, 64, 3)), velocities=np.empty((0, 64, 3)),
            thetas=np.empty((0, 0, 3)), theta1s=np.empty((0,)),
        )
    logger.info("library holds %d feasible candidates", len(library))
    _LIBRARY_CACHE[key] = library
    return library


def _interp_loop(points: np.ndarray, phase) -> np.ndarray:
    """Periodic linear interpolation of a 64-point loop.

    points is (..., 64, 3); phase broadcasts over the leading axes.
    """
    n = points.shape[-2]
    f = (np.asarray(phase, dtype=float) % TWO_PI) * n / TWO_PI
    i0 = np.floor(f).astype(int) % n
    w = f - np.floor(f)
    lo = np.take(points, i0, axis=-2)
    hi = np.take(points, (i0 + 1) % n, axis=-2)
    return lo * (1.0 - w)[..., None] + hi * w[..., None]


def _objective_at(
    traj: np.ndarray, vel: np.ndarray, phase: float, wps: np.ndarray,
    use_velocity: bool,
) -> float:
    """Objective for one candidate trajectory at one scalar phase."""
    total = 0.0
    for k, delta in enumerate(_DELTAS):
        p = _interp_loop(traj, phase + delta)
        diff = p - wps[k, :3]
        total += float(diff @ diff)
        if use_velocity:
            v = _interp_loop(vel, phase + delta)
            total += _velocity_misalignment(v, wps[k, 3:6])
    return total


def _velocity_misalignment(v_model: np.ndarray, v_query: np.ndarray) -> float:
    na = float(np.linalg.norm(v_model))
    nb = float(np.linalg.norm(v_query))
    if na == 0.0 or nb == 0.0:
        return 1.0
    return 1.0 - float(v_model @ v_query) / (na * nb)


def waypoint_objective(
    params: BennettParams, phase: float, wps: np.ndarray,
    cfg: InverseConfig | None = None,
) -> float:
    """Squared position mismatch of a design against query waypoints.

    The design's trajectory is produced by the canonical generation
    pipeline (sweep, gap fill, low-pass, jump gate) and normalized with
    cfg.c99; designs rejected by any gate score infinity.  With
    cfg.use_velocity, each waypoint adds one minus the cosine of the
    angle between model and query velocities.

    params must be a raw-scale design (scale 1); its alpha23 branch is
    honoured as given.
    """
    cfg = cfg or InverseConfig()
    wps = np.asarray(wps, dtype=float)
    cached = _cached_trajectory(params, cfg.c99)
    if cached is None:
        return INFEASIBLE
    traj, vel = cached
    return _objective_at(traj, vel, phase, wps, cfg.use_velocity)


_TRAJECTORY_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray] | None] = {}


def _cached_trajectory(
    params: BennettParams, c99: float
) -> tuple[np.ndarray, np.ndarray] | None:
    key = (params.a12, params.alpha12, params.alpha23, c99)
    if key in _TRAJECTORY_CACHE:
        return _TRAJECTORY_CACHE[key]
    gen_cfg = _canonical_generation_config()
    swept = sweep(params, gen_cfg.solver, gen_cfg.n_frames)
    value = None
    if swept.converged_fraction >= gen_cfg.gate2_threshold:
        filled = fill_gaps(swept.positions(), swept.converged_mask())
        filtered = lowpass_dft(filled, gen_cfg.fc)
        if gate3_check(filtered).passed:
            processed = process_points(subsample64(filtered.points))
            _, traj, vel = _normalize_arrays(
                params, processed.positions, processed.velocities, c99
            )
            value = (traj, vel)
    if len(_TRAJECTORY_CACHE) > 4096:
        _TRAJECTORY_CACHE.clear()
    _TRAJECTORY_CACHE[key] = value
    return value


def _coarse_costs(
    library: CandidateLibrary, wps: np.ndarray, cfg: InverseConfig
) -> np.ndarray:
    """Objective of every library candidate at every phase offset, (M, P)."""
    phases = TWO_PI * np.arange(cfg.phase_steps) / cfg.phase_steps
    costs = np.zeros((len(library), cfg.phase_steps))
    for k, delta in enumerate(_DELTAS):
        pts = _interp_loop(library.trajectories, phases + delta)
        diff = pts - wps[k, :3]
        costs += np.einsum("mpi,mpi->mp", diff, diff)
        if cfg.use_velocity:
            v = _interp_loop(library.velocities, phases + delta)
            vq = wps[k, 3:6]
            nv = np.linalg.norm(v, axis=-1)
            nq = np.linalg.norm(vq)
            denom = nv * nq
            cosine = np.where(denom > 0.0, (v @ vq) / np.where(denom == 0.0, 1.0, denom), 0.0)
            costs += 1.0 - cosine
    return costs


@dataclass
class _RefineState:
    a12: float
    alpha12: float
    phase: float
    branch: str
    cost: float
    traj: np.ndarray
    vel: np.ndarray
    thetas: np.ndarray
    evals: int = 0


def _refined_trajectory(
    state: _RefineState, a12: float, alpha12: float, cfg: InverseConfig,
    gen_cfg: GenerationConfig, theta1s: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """Trajectory of a nearby design, continued from the state's sweep.

    Follower angles iterate from the current point's solution, which
    keeps the assembly branch while costing a fraction of a cold
    multistarted sweep.  Returns None when any generation gate fails.
    """
    params = derive_dependents(a12, alpha12, branch=state.branch)
    if isinstance(params, Gate1Rejection):
        return None
    thetas, _, conv = resweep(params, theta1s, state.thetas, gen_cfg.solver)
    if conv.mean() < gen_cfg.gate2_threshold:
        return None
    positions = joint3_positions(params, theta1s, thetas[:, 0])
    filled = fill_gaps(positions, conv)
    filtered = lowpass_dft(filled, gen_cfg.fc)
    if not gate3_check(filtered).passed:
        return None
    processed = process_points(subsample64(filtered.points))
    _, traj, vel = _normalize_arrays(
        params, processed.positions, processed.velocities, cfg.c99
    )
    return traj, vel, thetas


def _refine_seed(
    library: CandidateLibrary, seed_m: int, seed_phase: float, seed_cost: float,
    wps: np.ndarray, cfg: InverseConfig, steps: tuple[float, float, float],
) -> _RefineState:
    """Pattern search around one coarse seed; accepts only improvements."""
    gen_cfg = _canonical_generation_config()
    state = _RefineState(
        a12=float(library.a12[seed_m]),
        alpha12=float(library.alpha12[seed_m]),
        phase=seed_phase,
        branch=library.branches[seed_m],
        cost=seed_cost,
        traj=library.trajectories[seed_m],
        vel=library.velocities[seed_m],
        thetas=library.thetas[seed_m],
    )
    step_a, step_al, step_ph = steps
    geometry_cache: dict[tuple[float, float], tuple | None] = {
        (state.a12, state.alpha12): (state.traj, state.vel, state.thetas)
    }

    for _ in range(cfg.refine_iters):
        improved = False
        for dim in range(3):
            for sign in (1.0, -1.0):
                a12, alpha12, phase = state.a12, state.alpha12, state.phase
                if dim == 0:
                    a12 = a12 + sign * step_a
                    if not 1e-4 < a12 < 1.0 - 1e-4:
                        continue
                elif dim == 1:
                    alpha12 = (alpha12 + sign * step_al) % TWO_PI
                    if alpha12 <= 0.0:
                        continue
                else:
                    phase = (phase + sign * step_ph) % TWO_PI

                geo_key = (a12, alpha12)
                if geo_key not in geometry_cache:
                    geometry_cache[geo_key] = _refined_trajectory(
                        state, a12, alpha12, cfg, gen_cfg, library.theta1s
                    )
                geometry = geometry_cache[geo_key]
                state.evals += 1
                if geometry is None:
                    continue
                traj, vel, thetas = geometry
                cost = _objective_at(traj, vel, phase, wps, cfg.use_velocity)
                if cost < state.cost:
                    state.a12, state.alpha12, state.phase = a12, alpha12, phase
                    state.cost = cost
                    state.traj, state.vel, state.thetas = traj, vel, thetas
                    improved = True
                    break
        if not improved:
            step_a *= 0.5
            step_al *= 0.5
            step_ph *= 0.5
            if max(step_a, step_al, step_ph) < _STEP_FLOOR:
                break
    return state


def _axis_step(values: np.ndarray) -> float:
    """Half the typical spacing of a coarse grid axis."""
    uniq = np.unique(values)
    if uniq.size < 2:
        return 0.01
    return 0.5 * float(np.median(np.diff(uniq)))


def solve_inverse(wps: np.ndarray, cfg: InverseConfig) -> InverseResult | NoSolution:
    """Recover the design whose trajectory best explains the waypoints.

    Runs the coarse candidate-by-phase scan, refines the top_k seeds and
    returns the best.  All finalists are reported so near-ties between
    distinct designs stay observable.  The refined objective never
    exceeds its seed's coarse value (the search only ever accepts
    improvements).
    """
    wps = np.asarray(wps, dtype=float)
    if wps.shape != (3, 7):
        raise ValueError(f"waypoints must be (3, 7), got {wps.shape}")
    if not np.isfinite(wps).all():
        raise ValueError("waypoints must be finite")

    library = build_library(cfg)
    if len(library) == 0:
        return NoSolution(candidates_evaluated=0, reason="no feasible candidate in the coarse grid")

    costs = _coarse_costs(library, wps, cfg)
    evals = costs.size
    flat = costs.ravel()
    order = np.argsort(flat, kind="stable")
    n_seeds = min(cfg.top_k, flat.size)
    phases = TWO_PI * np.arange(cfg.phase_steps) / cfg.phase_steps

    if not np.isfinite(flat[order[0]]):
        return NoSolution(candidates_evaluated=evals, reason="all candidates scored infeasible")

    steps = (
        _axis_step(library.a12),
        _axis_step(library.alpha12),
        math.pi / cfg.phase_steps,
    )
    finalists: list[Finalist] = []
    for rank in range(n_seeds):
        m, p = divmod(int(order[rank]), cfg.phase_steps)
        seed_cost = float(flat[order[rank]])
        if cfg.refine_iters > 0:
            state = _refine_seed(library, m, float(phases[p]), seed_cost, wps, cfg, steps)
        else:
            state = _RefineState(
                a12=float(library.a12[m]), alpha12=float(library.alpha12[m]),
                phase=float(phases[p]), branch=library.branches[m],
                cost=seed_cost, traj=library.trajectories[m],
                vel=library.velocities[m], thetas=library.thetas[m],
            )
        evals += state.evals
        a23 = 1.0 - state.a12
        finalists.append(Finalist(
            a12_hat=(state.a12 / a23) / cfg.c99,
            alpha12_hat=state.alpha12,
            phase_hat=state.phase,
            objective=state.cost,
        ))

    best = min(finalists, key=lambda f: f.objective)
    logger.info(
        "inverse solve: objective %.3e at a12_hat %.4f alpha12_hat %.4f",
        best.objective, best.a12_hat, best.alpha12_hat,
    )
    return InverseResult(
        a12_hat=best.a12_hat,
        alpha12_hat=best.alpha12_hat,
        phase_hat=best.phase_hat,
        objective=best.objective,
        candidates_evaluated=evals,
        finalists=finalists,
    )


def phase_aligned_mae(moving: np.ndarray, reference: np.ndarray) -> tuple[float, float]:
    """L1 trajectory distance minimised over a common phase shift.

    The moving loop is resampled at shifted phases and compared to the
    reference pointwise; a coarse scan over all integer shifts is
    sharpened by bisection on the surrounding interval.  Returns
    (best mae, best shift in radians).
    """
    moving = np.asarray(moving, dtype=float)
    reference = np.asarray(reference, dtype=float)
    n = reference.shape[0]
    base = TWO_PI * np.arange(n) / n

    def mae(shift: float) -> float:
        resampled = _interp_loop(moving, base + shift)
        return float(np.abs(resampled - reference).mean())

    shifts = TWO_PI * np.arange(n) / n
    coarse = np.array([mae(s) for s in shifts])
    k = int(np.argmin(coarse))
    lo = shifts[k] - TWO_PI / n
    hi = shifts[k] + TWO_PI / n
    for _ in range(40):
        third = (hi - lo) / 3.0
        m1, m2 = lo + third, hi - third
        if mae(m1) <= mae(m2):
            hi = m2
        else:
            lo = m1
    best = 0.5 * (lo + hi)
    return mae(best), best % TWO_PI
