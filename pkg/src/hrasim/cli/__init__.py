"""Command-line orchestration of the simulate, augment, fit, quantify and bn stages."""

from .config import CONFIG_SCHEMA, STAGES, ConfigError, PipelineConfig, load_config, parse_config
from .pipeline import (RunManifest, StageError, StageRecord, run_augment, run_bn, run_fit,
                       run_pipeline, run_quantify, run_simulate, run_stage, sha256_file)

__all__ = [
    "CONFIG_SCHEMA", "STAGES", "ConfigError", "PipelineConfig", "load_config", "parse_config",
    "RunManifest", "StageError", "StageRecord", "run_augment", "run_bn", "run_fit", "run_pipeline",
    "run_quantify", "run_simulate", "run_stage", "sha256_file",
]
