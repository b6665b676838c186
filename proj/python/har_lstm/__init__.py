"""LSTM human activity recognition on tri-axial accelerometer data."""

from ._core import (
    ACTIVITIES,
    CheckpointError,
    DataError,
    HarError,
    IoError,
    Model,
    NetConfig,
    ShapeError,
    StreamClassifier,
    TrainConfig,
    TrainingDiverged,
    cli_main,
    load_dataset,
    make_segments,
    parse_dataset,
    parse_line,
    split_indices,
    synthesize,
    train,
)

__all__ = [
    "ACTIVITIES",
    "CheckpointError",
    "DataError",
    "HarError",
    "IoError",
    "Model",
    "NetConfig",
    "ShapeError",
    "StreamClassifier",
    "TrainConfig",
    "TrainingDiverged",
    "cli_main",
    "load_dataset",
    "make_segments",
    "parse_dataset",
    "parse_line",
    "split_indices",
    "synthesize",
    "train",
]
