"""Pose-signature features and LSTM sequence classification for dance forms.

Pipeline: 2D skeleton clips -> 75-D per-frame pose signatures -> fusion
with external per-frame deep-feature streams into fixed-length chunks ->
peephole-LSTM classifier over 6 classes, trained from scratch with Adam
and early stopping -> confusion-matrix evaluation reports.
"""

__version__ = "0.1.0"

from . import checkpoint, features, metrics, model, neural, signature, skeleton
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DanceSigError,
    DegeneratePoseError,
    LayoutError,
    ParseError,
    SchemaError,
    TrainingError,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DanceSigError",
    "DegeneratePoseError",
    "LayoutError",
    "ParseError",
    "SchemaError",
    "TrainingError",
    "checkpoint",
    "features",
    "metrics",
    "model",
    "neural",
    "signature",
    "skeleton",
]
