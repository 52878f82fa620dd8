from agency_count.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from agency_count.training.trainer import (
    EpochLog,
    TrainingRun,
    labeled_only_baseline,
    run_training,
    train_step,
)

__all__ = [
    "Checkpoint",
    "EpochLog",
    "TrainingRun",
    "labeled_only_baseline",
    "load_checkpoint",
    "run_training",
    "save_checkpoint",
    "train_step",
]
