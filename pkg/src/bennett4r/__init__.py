"""Spatial four-revolute linkage synthesis: forward sweeps, gated dataset
generation, normalization, waypoint-based inverse recovery and scoring."""

from .dataset import GateReport, GenerationConfig, GridConfig, Sample, generate, run_candidate
from .inverse import InverseConfig, InverseResult, NoSolution, solve_inverse
from .kinematics import (
    BennettParams,
    Gate1Rejection,
    JointAngles,
    closure_residual,
    derive_dependents,
    dh_transform,
)
from .metrics import MetricsReport, evaluate, wrap_angle
from .normalize import NormalizationResult, compute_c99, normalize_dataset
from .records import PredictionRecord, read_samples, write_samples
from .solver import FrameSolution, RawSweep, SolverConfig, solve_frame_multistart, sweep

__version__ = "0.1.0"

__all__ = [
    "BennettParams",
    "FrameSolution",
    "Gate1Rejection",
    "GateReport",
    "GenerationConfig",
    "GridConfig",
    "InverseConfig",
    "InverseResult",
    "JointAngles",
    "MetricsReport",
    "NoSolution",
    "NormalizationResult",
    "PredictionRecord",
    "RawSweep",
    "Sample",
    "SolverConfig",
    "closure_residual",
    "compute_c99",
    "derive_dependents",
    "dh_transform",
    "evaluate",
    "generate",
    "normalize_dataset",
    "read_samples",
    "run_candidate",
    "solve_frame_multistart",
    "solve_inverse",
    "sweep",
    "wrap_angle",
    "write_samples",
]
