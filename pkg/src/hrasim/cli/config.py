"""Pipeline configuration files (YAML, schema-versioned)."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from ..quantify.distributions import FAMILIES

__all__ = ["CONFIG_SCHEMA", "STAGES", "ConfigError", "PipelineConfig", "load_config",
           "builtin_config_text"]

CONFIG_SCHEMA = 1
STAGES = ("simulate", "augment", "fit", "quantify", "bn")
SEED_KEYS = ("simulate", "train", "generate", "sample")

_DEFAULTS = {
    "simulate": {"n_trials": 40},
    "augment": {
        "source": None,
        "framing": "time",
        "n_synthetic": 1000,
        "kde_points": 200,
        "stage1": {"epochs": 2000, "lr": 1e-2, "h_lat": 8, "layers": 1, "optimizer": "adam"},
        "stage2": {"epochs": 2000, "lr": 1e-3, "z_dim": 4, "optimizer": "adam", "g_steps": 2,
                   "moment_weight": 1.0},
    },
    "quantify": {"source": "synthetic", "dataset": None, "families": list(FAMILIES),
                 "procedures": [], "ks_max": 0.15, "shape_bounds": [1e-3, 1e3]},
    "bn": {"report": None, "mc_samples": 1_000_000},
    "record_wall_times": False,
}


class ConfigError(ValueError):
    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


def _merge(base: dict, over: dict, where: str) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"{where}.{k}", "unknown key")
        if isinstance(base[k], dict) and base[k] and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


@dataclass
class PipelineConfig:
    """Validated pipeline settings; relative paths resolve against ``base_dir``."""

    scenario: str
    output_dir: Path
    seeds: dict
    stages: dict
    settings: dict
    base_dir: Path = field(default_factory=Path.cwd)
    origin: str = "<config>"

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def override_seed(self, seed: int) -> None:
        for k in self.seeds:
            self.seeds[k] = int(seed)

    def canonical(self) -> dict:
        """Everything that determines the results (the output location does not)."""
        return {"schema_version": CONFIG_SCHEMA, "scenario": self.scenario, "seeds": self.seeds,
                "stages": self.stages, **self.settings}

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def simulate(self):
        return self.settings["simulate"]

    @property
    def augment(self):
        return self.settings["augment"]

    @property
    def quantify(self):
        return self.settings["quantify"]

    @property
    def bn(self):
        return self.settings["bn"]


def parse_config(doc, origin="<config>", base_dir=None) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError(origin, "top level must be a mapping")
    if doc.get("schema_version") != CONFIG_SCHEMA:
        raise ConfigError(f"{origin}:schema_version",
                          f"expected {CONFIG_SCHEMA}, got {doc.get('schema_version')!r}")
    allowed = {"schema_version", "scenario", "output_dir", "seeds", "stages", *_DEFAULTS}
    for k in doc:
        if k not in allowed:
            raise ConfigError(f"{origin}:{k}", "unknown key")
    if "scenario" not in doc:
        raise ConfigError(f"{origin}:scenario", "missing required field")
    seeds = doc.get("seeds")
    if not isinstance(seeds, dict):
        raise ConfigError(f"{origin}:seeds", "seeds must be given explicitly as a mapping")
    for k in SEED_KEYS:
        if k not in seeds:
            raise ConfigError(f"{origin}:seeds.{k}", "missing seed (no implicit defaults)")
        if not isinstance(seeds[k], int) or isinstance(seeds[k], bool) or seeds[k] < 0:
            raise ConfigError(f"{origin}:seeds.{k}", "seed must be a non-negative integer")
    for k in seeds:
        if k not in SEED_KEYS:
            raise ConfigError(f"{origin}:seeds.{k}", "unknown seed")
    stages = {s: True for s in STAGES}
    for k, v in (doc.get("stages") or {}).items():
        if k not in STAGES:
            raise ConfigError(f"{origin}:stages.{k}", f"unknown stage (expected one of {STAGES})")
        if not isinstance(v, bool):
            raise ConfigError(f"{origin}:stages.{k}", "stage toggle must be true/false")
        stages[k] = v
    settings = _merge(_DEFAULTS, {k: v for k, v in doc.items() if k in _DEFAULTS}, origin)
    cfg = PipelineConfig(str(doc["scenario"]), Path(doc.get("output_dir", "out")),
                         {k: int(seeds[k]) for k in SEED_KEYS}, stages, settings,
                         Path(base_dir) if base_dir else Path.cwd(), origin)
    _validate(cfg)
    return cfg


def _validate(cfg: PipelineConfig):
    o = cfg.origin
    n = cfg.simulate["n_trials"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"{o}:simulate.n_trials", "must be an integer >= 1")
    a = cfg.augment
    if a["framing"] not in ("time", "feature"):
        raise ConfigError(f"{o}:augment.framing", "must be 'time' or 'feature'")
    if not isinstance(a["n_synthetic"], int) or a["n_synthetic"] < 0:
        raise ConfigError(f"{o}:augment.n_synthetic", "must be an integer >= 0")
    if a["stage2"]["z_dim"] < 1:
        raise ConfigError(f"{o}:augment.stage2.z_dim", "must be >= 1")
    q = cfg.quantify
    if q["source"] not in ("synthetic", "simulated"):
        raise ConfigError(f"{o}:quantify.source", "must be 'synthetic' or 'simulated'")
    if not q["families"]:
        raise ConfigError(f"{o}:quantify.families", "at least one family is required")
    for f in q["families"]:
        if f not in FAMILIES:
            raise ConfigError(f"{o}:quantify.families", f"unknown family {f!r}")
    for j, p in enumerate(q["procedures"]):
        for key in ("id", "segment", "pc", "tavail"):
            if key not in p:
                raise ConfigError(f"{o}:quantify.procedures[{j}].{key}", "missing required field")
        if not 0.0 <= float(p["pc"]) <= 1.0:
            raise ConfigError(f"{o}:quantify.procedures[{j}].pc", "must lie in [0, 1]")
    if cfg.stages["quantify"] and not q["procedures"]:
        raise ConfigError(f"{o}:quantify.procedures", "quantify stage enabled but no procedures given")
    if not isinstance(cfg.bn["mc_samples"], int) or cfg.bn["mc_samples"] < 1:
        raise ConfigError(f"{o}:bn.mc_samples", "must be an integer >= 1")
    # referenced files must exist at load time
    sc = cfg.scenario
    if not sc.startswith("builtin:") and not cfg.resolve(sc).is_file():
        raise ConfigError(f"{o}:scenario", f"file not found: {cfg.resolve(sc)}")
    for where, p in (("augment.source", a["source"]), ("quantify.dataset", q["dataset"]),
                     ("bn.report", cfg.bn["report"])):
        if p is not None and not cfg.resolve(p).is_file():
            raise ConfigError(f"{o}:{where}", f"file not found: {cfg.resolve(p)}")


def builtin_config_text(name: str) -> str:
    res = resources.files("hrasim.data").joinpath("configs", f"{name}.yaml")
    if not res.is_file():
        raise ConfigError(f"builtin:{name}", "no such shipped config")
    return res.read_text()


def load_config(path) -> PipelineConfig:
    """Load a YAML config file, or ``builtin:<name>`` for a shipped one."""
    s = str(path)
    if s.startswith("builtin:"):
        text, origin, base = builtin_config_text(s.split(":", 1)[1]), s, Path.cwd()
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(s, "config file not found")
        text, origin, base = p.read_text(), s, p.resolve().parent
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(origin, f"YAML error: {e}")
    return parse_config(doc, origin, base)
