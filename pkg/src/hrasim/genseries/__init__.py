"""Latent-space adversarial generator for duration sequences and comparison metrics."""

from .gru import GruCell, RecurrentNet
from .metrics import QUANTILE_LEVELS, cv, compare_segments, kde, kde_csv, mae, mse, quantile_profile
from .timegan import (SequenceBatch, Stage1Config, Stage2Config, TimeGanModel, TrainingDiverged,
                      discriminator_accuracy, generate, gradient_check, load_model, save_model,
                      train_stage1, train_stage2)

__all__ = [
    "GruCell", "RecurrentNet", "QUANTILE_LEVELS", "cv", "compare_segments", "kde", "kde_csv", "mae",
    "mse", "quantile_profile", "SequenceBatch", "Stage1Config", "Stage2Config", "TimeGanModel",
    "TrainingDiverged", "discriminator_accuracy", "generate", "gradient_check", "load_model",
    "save_model", "train_stage1", "train_stage2",
]
