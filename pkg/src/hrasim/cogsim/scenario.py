"""Scenario files: task steps, chunks, parameters and calibration constants (YAML)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .memory import ChunkSpec, CognitiveParams
from .simulate import BatchResult
from .task import Branch, Step, TaskModel

__all__ = ["SCHEMA_VERSION", "Scenario", "ScenarioError", "load_scenario", "builtin_scenario",
           "batch_summary"]

SCHEMA_VERSION = 1
CALIBRATED = ("motor_press", "speech", "visual_encode", "aural_encode")


class ScenarioError(ValueError):
    """Schema violation; ``where`` locates the offending field."""

    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


@dataclass(frozen=True)
class Scenario:
    task: TaskModel
    chunks: tuple[ChunkSpec, ...]
    params: CognitiveParams
    reference: dict = field(default_factory=dict)
    description: str = ""

    @property
    def id(self):
        return self.task.id

    def with_params(self, **kw) -> "Scenario":
        return dataclasses.replace(self, params=dataclasses.replace(self.params, **kw))


def _history(spec, where):
    if isinstance(spec, dict):
        try:
            n, first, last = int(spec["count"]), float(spec["first"]), float(spec["last"])
        except KeyError as e:
            raise ScenarioError(where, f"history shorthand needs count/first/last, missing {e}")
        if n < 1 or (n > 1 and not first < last):
            raise ScenarioError(where, "history shorthand needs count >= 1 and first < last")
        return tuple(np.linspace(first, last, n)) if n > 1 else (first,)
    if isinstance(spec, list):
        return tuple(float(t) for t in spec)
    raise ScenarioError(where, "history must be a list of times or {count, first, last}")


def parse_scenario(doc: dict, origin: str = "<scenario>") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError(origin, "top level must be a mapping")
    ver = doc.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ScenarioError(f"{origin}:schema_version", f"expected {SCHEMA_VERSION}, got {ver!r}")
    for key in ("id", "segments", "chunks", "steps"):
        if key not in doc:
            raise ScenarioError(f"{origin}:{key}", "missing required field")

    pkw = dict(doc.get("params") or {})
    cal = doc.get("calibration") or {}
    for k in CALIBRATED:
        if k not in cal:
            raise ScenarioError(f"{origin}:calibration.{k}", "missing calibration constant")
        pkw[k] = float(cal[k])
    known = {f.name for f in dataclasses.fields(CognitiveParams)}
    for k in pkw:
        if k not in known:
            raise ScenarioError(f"{origin}:params.{k}", "unknown parameter")
    try:
        params = CognitiveParams(**pkw)
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"{origin}:params", str(e))

    default_hist = doc.get("default_history", [])
    chunks = []
    for j, c in enumerate(doc["chunks"]):
        where = f"{origin}:chunks[{j}]"
        try:
            chunks.append(ChunkSpec(str(c["id"]), {str(k): str(v) for k, v in c["slots"].items()},
                                    _history(c.get("history", default_hist), where)))
        except KeyError as e:
            raise ScenarioError(where, f"missing field {e}")
        except ValueError as e:
            raise ScenarioError(where, str(e))

    steps = []
    for j, s in enumerate(doc["steps"]):
        where = f"{origin}:steps[{j}]"
        try:
            br = s.get("branch")
            branch = None
            if br is not None:
                branch = Branch(br.get("slot"), {str(k): str(v) for k, v in (br.get("cases") or {}).items()},
                                br.get("default"), br.get("on_failure"))
            req = s.get("request")
            steps.append(Step(str(s["id"]), s["kind"], str(s["segment"]),
                              {str(k): str(v) for k, v in req.items()} if req else None,
                              s.get("target"), int(s.get("utterances", 1)), branch))
        except KeyError as e:
            raise ScenarioError(where, f"missing field {e}")
        except ValueError as e:
            raise ScenarioError(where, str(e))
    try:
        task = TaskModel(str(doc["id"]), tuple(steps), tuple(str(x) for x in doc["segments"]))
    except ValueError as e:
        raise ScenarioError(f"{origin}:steps", str(e))
    return Scenario(task, tuple(chunks), params, dict(doc.get("reference") or {}),
                    str(doc.get("description", "")))


def load_scenario(path) -> Scenario:
    """Load a scenario from a YAML file, or ``builtin:<name>`` for a shipped one."""
    text_path = str(path)
    if text_path.startswith("builtin:"):
        return builtin_scenario(text_path.split(":", 1)[1])
    p = Path(path)
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ScenarioError(str(p), f"YAML error: {e}")
    return parse_scenario(doc, str(p))


def builtin_scenario(name: str) -> Scenario:
    res = resources.files("hrasim.data").joinpath("scenarios", f"{name}.yaml")
    if not res.is_file():
        raise ScenarioError(f"builtin:{name}", "no such shipped scenario")
    return parse_scenario(yaml.safe_load(res.read_text()), f"builtin:{name}")


def batch_summary(result: BatchResult, scenario: Scenario | None = None) -> dict:
    """Per-segment mean / population variance / CV plus the error tally."""
    ds = result.dataset
    out = {"source": ds.source, "n_trials": sum(result.tally.values()), "n_rows": len(ds),
           "error_tally": dict(result.tally), "segments": {}}
    for s in ds.segments:
        x = ds.column(s)
        entry = {}
        if len(x):
            m, v = float(np.mean(x)), float(np.var(x))
            entry = {"mean": m, "variance": v, "cv": float(np.sqrt(v) / m) if m else None}
        if scenario is not None and s in scenario.reference:
            entry["reference"] = scenario.reference[s]
        out["segments"][s] = entry
    return out
