"""Simplified ACT-R style simulator of a single operator running a procedure."""

from .memory import (NO_TRACE, ChunkSpec, CognitiveParams, Failure, Retrieved, attempt_retrieval,
                     base_level_activation, match_score)
from .scenario import Scenario, ScenarioError, batch_summary, builtin_scenario, load_scenario
from .simulate import BatchResult, CognitiveTrace, TraceEvent, TrialError, run_batch, run_trial
from .task import END, STEP_KINDS, Branch, Step, TaskModel

__all__ = [
    "NO_TRACE", "ChunkSpec", "CognitiveParams", "Failure", "Retrieved", "attempt_retrieval",
    "base_level_activation", "match_score", "Scenario", "ScenarioError", "batch_summary",
    "builtin_scenario", "load_scenario", "BatchResult", "CognitiveTrace", "TraceEvent",
    "TrialError", "run_batch", "run_trial", "END", "STEP_KINDS", "Branch", "Step", "TaskModel",
]
