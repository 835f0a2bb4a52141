"""Grid-based generation of the Bennett trajectory dataset.

Candidates are laid out on a rectangular (a12, alpha12) grid over the
feasible design region, excluding the degenerate neighbourhoods of
a12 = 0.5 and twist angles near 0 and pi where the linkage collapses.
Each candidate runs the full pipeline: parameter completion (gate 1,
real twist solution), closure sweep (gate 2, converged fraction), gap
filling and spectral smoothing, jump check (gate 3), then subsampling
into the fixed 64-point sample with velocities and waypoints.

Every candidate is charged to exactly one outcome, the first gate that
rejects it or acceptance, so the report tallies always add up.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kinematics import Gate1Rejection, derive_dependents
from .solver import RawSweep, SolverConfig, sweep
from .trajectory import (
    extract_waypoints,
    fill_gaps,
    gate3_check,
    lowpass_dft,
    process_points,
    subsample64,
)

logger = logging.getLogger(__name__)

DEG = math.pi / 180.0

# Feasible design region: a12 stays clear of the 0.5 fold singularity,
# alpha12 clear of the planar-degenerate twists 0 and pi.
A12_INTERVALS = ((0.02, 0.48), (0.52, 0.98))
ALPHA12_INTERVALS = ((5 * DEG, 178 * DEG), (185 * DEG, 355 * DEG))


@dataclass(frozen=True)
class GridConfig:
    """Candidate grid layout over the two design parameters.

    n_a and n_alpha are totals per parameter; each is split across the
    two disjoint intervals proportionally to interval length.
    """

    n_a: int = 263
    n_alpha: int = 263
    a_intervals: tuple[tuple[float, float], ...] = A12_INTERVALS
    alpha_intervals: tuple[tuple[float, float], ...] = ALPHA12_INTERVALS


def _allocate(total: int, lengths: list[float]) -> list[int]:
    """Largest-remainder proportional allocation; ties to lower index."""
    quotas = [total * length / sum(lengths) for length in lengths]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(lengths)), key=lambda i: (counts[i] - quotas[i], i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def _grid_axis(total: int, intervals: tuple[tuple[float, float], ...]) -> np.ndarray:
    counts = _allocate(total, [hi - lo for lo, hi in intervals])
    parts = [np.linspace(lo, hi, c) for (lo, hi), c in zip(intervals, counts) if c > 0]
    return np.concatenate(parts)


def build_grid(cfg: GridConfig) -> list[tuple[int, int, float, float]]:
    """Ordered candidate list [(i, j, a12, alpha12)], row-major in (i, j).

    Interval endpoints are included whenever an interval receives at
    least two points, so the extreme designs are always present at the
    default resolutions.
    """
    if cfg.n_a < 1 or cfg.n_alpha < 1:
        raise ValueError("grid counts must be at least 1")
    a_values = _grid_axis(cfg.n_a, cfg.a_intervals)
    alpha_values = _grid_axis(cfg.n_alpha, cfg.alpha_intervals)
    return [
        (i, j, float(a), float(al))
        for i, a in enumerate(a_values)
        for j, al in enumerate(alpha_values)
    ]


@dataclass(frozen=True)
class Sample:
    """One accepted dataset entry.

    Parameters are stored as generated (pre-normalization unless a
    normalization stage rescaled them); positions and velocities are the
    64-point subsampled trajectory, waypoints the 3x7 condensed query
    representation.
    """

    grid_index: tuple[int, int]
    a12: float
    alpha12: float
    a23: float
    alpha23: float
    converged_fraction: float
    positions: np.ndarray
    velocities: np.ndarray
    waypoints: np.ndarray


@dataclass(frozen=True)
class GateReport:
    """First-failing-gate accounting over one generation run."""

    candidates: int
    gate1_rejects: int
    gate2_rejects: int
    gate3_rejects: int
    accepted: int

    @property
    def pass_rate(self) -> float:
        return self.accepted / self.candidates if self.candidates else 0.0


@dataclass(frozen=True)
class GenerationConfig:
    """Everything one generation run needs, bundled for the workers."""

    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    n_frames: int = 360
    fc: int = 72
    gate2_threshold: float = 0.8
    workers: int = 1


@dataclass(frozen=True)
class CandidateResult:
    """Full pipeline outcome for one candidate.

    outcome is "ok" or the name of the first failing gate.  sample,
    swept and branch are populated only on acceptance; branch records
    which alpha23 resolution the accepted sweep used.
    """

    outcome: str
    sample: Sample | None = None
    swept: RawSweep | None = None
    branch: str = "principal"


def run_candidate(
    a12: float, alpha12: float, cfg: GenerationConfig,
    grid_index: tuple[int, int] = (0, 0),
) -> CandidateResult:
    """Run one candidate through all gates; first failure wins."""
    params = derive_dependents(a12, alpha12)
    if isinstance(params, Gate1Rejection):
        return CandidateResult(outcome="gate1")

    branch = "principal"
    swept = sweep(params, cfg.solver, cfg.n_frames)
    if swept.converged_fraction < cfg.gate2_threshold:
        # One retry on the mirrored twist branch before giving up.
        branch = "supplementary"
        params = derive_dependents(a12, alpha12, branch=branch)
        swept = sweep(params, cfg.solver, cfg.n_frames)
        if swept.converged_fraction < cfg.gate2_threshold:
            return CandidateResult(outcome="gate2")

    filled = fill_gaps(
        swept.positions(), swept.converged_mask(), min_fraction=cfg.gate2_threshold
    )
    filtered = lowpass_dft(filled, cfg.fc)
    gate3 = gate3_check(filtered)
    if not gate3.passed:
        return CandidateResult(outcome="gate3")

    processed = process_points(subsample64(filtered.points))
    sample = Sample(
        grid_index=grid_index,
        a12=params.a12,
        alpha12=params.alpha12,
        a23=params.a23,
        alpha23=params.alpha23,
        converged_fraction=swept.converged_fraction,
        positions=processed.positions,
        velocities=processed.velocities,
        waypoints=extract_waypoints(processed),
    )
    return CandidateResult(outcome="ok", sample=sample, swept=swept, branch=branch)


def _pipeline_outcome(
    cand: tuple[int, int, float, float], cfg: GenerationConfig
) -> tuple[str, Sample | None]:
    i, j, a12, alpha12 = cand
    result = run_candidate(a12, alpha12, cfg, grid_index=(i, j))
    return result.outcome, result.sample


def _worker(args: tuple[tuple[int, int, float, float], GenerationConfig]):
    return _pipeline_outcome(*args)


def generate(cfg: GenerationConfig) -> tuple[list[Sample], GateReport]:
    """Run the whole grid through the pipeline.

    Candidates are processed independently, so any worker count yields
    the same samples in the same (row-major grid) order; workers > 1
    only spreads the load over processes.
    """
    candidates = build_grid(cfg.grid)
    logger.info("generating over %d candidates", len(candidates))

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunk = max(1, len(candidates) // (cfg.workers * 8))
            outcomes = list(pool.map(
                _worker,
                ((cand, cfg) for cand in candidates),
                chunksize=chunk,
            ))
    else:
        outcomes = [_pipeline_outcome(cand, cfg) for cand in candidates]

    tallies = {"gate1": 0, "gate2": 0, "gate3": 0, "ok": 0}
    samples: list[Sample] = []
    for tag, sample in outcomes:
        tallies[tag] += 1
        if sample is not None:
            samples.append(sample)

    report = GateReport(
        candidates=len(candidates),
        gate1_rejects=tallies["gate1"],
        gate2_rejects=tallies["gate2"],
        gate3_rejects=tallies["gate3"],
        accepted=tallies["ok"],
    )
    logger.info(
        "generation done: %d accepted of %d (pass rate %.3f)",
        report.accepted, report.candidates, report.pass_rate,
    )
    return samples, report
