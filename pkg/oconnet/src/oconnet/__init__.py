"""Neural inverse design for overconstrained linkages: a set encoder,
trajectory decoder and dual-branch parameter head trained on
engine-emitted waypoint datasets."""

from .data import Batch, WaypointDataset
from .evaluate import MetricsReport, evaluate_records, predict, score_files, write_predictions
from .losses import TaskWeights, loss_total, wrap_angle
from .model import ModelConfig, ModelOutputs, OConNet, decode_params
from .train import TrainConfig, TrainingResult, load_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "MetricsReport",
    "ModelConfig",
    "ModelOutputs",
    "OConNet",
    "TaskWeights",
    "TrainConfig",
    "TrainingResult",
    "WaypointDataset",
    "decode_params",
    "evaluate_records",
    "load_checkpoint",
    "loss_total",
    "predict",
    "score_files",
    "train",
    "wrap_angle",
    "write_predictions",
]
