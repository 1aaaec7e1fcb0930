"""Stage runners shared by the subcommands and the end-to-end pipeline.

Each stage reads only its declared inputs and writes only under the output
directory. Floats in CSV/JSON artifacts are rendered with 17 significant
digits so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .. import __version__
from ..cogsim import batch_summary, load_scenario, run_batch
from ..dataset import TimeSeriesDataset
from ..genseries import (SequenceBatch, Stage1Config, Stage2Config, compare_segments, generate,
                         kde_csv, save_model, train_stage1, train_stage2)
from ..genseries.timegan import TrainingDiverged
from ..quantify import (ScreeningRule, fit_mle, hep_report, quantify_procedure,
                        records_from_report, report_json, screen_fit, sensitivity_csv)
from ..quantify.distributions import DegenerateDataError
from ..riskbn import OVERALL, build_from_heps, infer, monte_carlo_forward, ranking_csv, series_failure
from .config import STAGES, PipelineConfig

__all__ = ["StageError", "StageRecord", "RunManifest", "run_simulate", "run_augment", "run_fit",
           "run_quantify", "run_bn", "run_pipeline", "sha256_file"]

SIMULATED = "simulated.csv"
SYNTHETIC = "synthetic.csv"
REPORT = "hep_report.json"


class StageError(RuntimeError):
    def __init__(self, stage: str, msg: str, **extra):
        super().__init__(f"{stage}: {msg}")
        self.stage, self.extra = stage, extra


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


@dataclass
class StageRecord:
    name: str
    status: str = "skipped"  # ok | skipped | failed
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_time: float = 0.0
    error: str | None = None


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    stages: list

    def to_dict(self, wall_times: bool = False) -> dict:
        out = {"schema_version": 1, "tool": "hrasim", "tool_version": self.tool_version,
               "config_hash": self.config_hash, "stages": []}
        for s in self.stages:
            d = {"name": s.name, "status": s.status, "inputs": s.inputs, "outputs": s.outputs}
            if s.error:
                d["error"] = s.error
            if wall_times:
                d["wall_time_s"] = s.wall_time
            out["stages"].append(d)
        return out


class _Stage:
    """Collects input/output digests; paths are recorded relative to ``out``."""

    def __init__(self, name: str, out: Path):
        self.rec = StageRecord(name, "ok")
        self.out = out

    def _key(self, p: Path) -> str:
        try:
            return str(p.resolve().relative_to(self.out.resolve()))
        except ValueError:
            return str(p)

    def input(self, p: Path, label: str | None = None, digest: str | None = None):
        self.rec.inputs[label or self._key(p)] = digest or sha256_file(p)

    def write(self, name: str, text: str):
        p = self.out / name
        p.write_text(text)
        self.rec.outputs[name] = sha256_file(p)
        return p

    def register(self, name: str):
        self.rec.outputs[name] = sha256_file(self.out / name)


def _scenario_digest(cfg: PipelineConfig) -> tuple[str, str]:
    s = cfg.scenario
    if s.startswith("builtin:"):
        name = s.split(":", 1)[1]
        data = resources.files("hrasim.data").joinpath("scenarios", f"{name}.yaml").read_bytes()
        return s, hashlib.sha256(data).hexdigest()
    p = cfg.resolve(s)
    return str(p), sha256_file(p)


def _load_scenario(cfg):
    s = cfg.scenario
    return load_scenario(s if s.startswith("builtin:") else cfg.resolve(s))


# ------------------------------------------------------------------- stages

def run_simulate(cfg: PipelineConfig, out: Path) -> StageRecord:
    st = _Stage("simulate", out)
    label, dig = _scenario_digest(cfg)
    st.input(Path(label), label=f"scenario:{label}", digest=dig)
    sc = _load_scenario(cfg)
    res = run_batch(sc.task, sc.chunks, sc.params, cfg.simulate["n_trials"], cfg.seeds["simulate"])
    if len(res.dataset) == 0:
        raise StageError("simulate", "no error-free trials; dataset would be empty",
                         tally=res.tally)
    st.write(SIMULATED, res.dataset.to_csv())
    st.write("traces.csv", res.traces_csv())
    st.write("summary.json", json.dumps(batch_summary(res, sc), indent=2, sort_keys=True) + "\n")
    return st.rec


def _source_dataset(cfg, out, st, key, default_name, stage):
    p = cfg.resolve(key) if key else out / default_name
    if not p.is_file():
        raise StageError(stage, f"input dataset not found: {p}")
    st.input(p)
    return TimeSeriesDataset.read_csv(p)


def run_augment(cfg: PipelineConfig, out: Path) -> StageRecord:
    st = _Stage("augment", out)
    a = cfg.augment
    ds = _source_dataset(cfg, out, st, a["source"], SIMULATED, "augment")
    try:
        batch = SequenceBatch.from_dataset(ds, a["framing"])
    except ValueError as e:
        raise StageError("augment", str(e))
    s1 = Stage1Config(seed=cfg.seeds["train"], **a["stage1"])
    s2 = Stage2Config(seed=cfg.seeds["train"], **a["stage2"])
    try:
        model = train_stage1(batch, s1)
        train_stage2(batch, model, s2)
    except TrainingDiverged as e:
        log = out / "training_log.json"
        _json_dump({"stage": e.stage, "epoch": e.epoch, "history": e.history}, log)
        raise StageError("augment", str(e), loss_history=str(log))
    model_path = out / "model.json"
    save_model(model, model_path)
    st.register("model.json")
    st.write("training_log.json", json.dumps(
        {"stage1": model.stage1_log, "stage2": [list(x) for x in model.stage2_log]}) + "\n")
    syn = generate(model, a["n_synthetic"], cfg.seeds["generate"])
    syn_ds = syn.to_dataset(source=f"{ds.source}:synthetic")
    syn_ds = TimeSeriesDataset(ds.segments, syn_ds.values, "synthetic", syn_ds.source)
    st.write(SYNTHETIC, syn_ds.to_csv())
    if len(syn_ds) > 0:
        metrics = {"levels": "100 matched quantiles", "n_source": len(ds), "n_synthetic": len(syn_ds),
                   "segments": compare_segments(ds.values, syn_ds.values, ds.segments)}
        st.write("metrics.json", json.dumps(metrics, indent=2, sort_keys=True) + "\n")
        st.write("kde.csv", kde_csv(ds.values, syn_ds.values, ds.segments, a["kde_points"]))
    return st.rec


def _quant_dataset(cfg, out, st, stage):
    q = cfg.quantify
    name = SYNTHETIC if q["source"] == "synthetic" else SIMULATED
    return _source_dataset(cfg, out, st, q["dataset"], name, stage)


def _rule(cfg):
    q = cfg.quantify
    lo, hi = q["shape_bounds"]
    return ScreeningRule(float(q["ks_max"]), float(lo), float(hi))


def run_fit(cfg: PipelineConfig, out: Path) -> StageRecord:
    st = _Stage("fit", out)
    ds = _quant_dataset(cfg, out, st, "fit")
    rule = _rule(cfg)
    fits = {}
    for seg in ds.segments:
        x = ds.column(seg)
        fits[seg] = {}
        for fam in cfg.quantify["families"]:
            try:
                d = fit_mle(x, fam)
            except DegenerateDataError as e:
                fits[seg][fam] = {"error": str(e)}
                continue
            ks, why = screen_fit(x, d, rule)
            fits[seg][fam] = {"fit": d.to_dict(), "ks": ks, "excluded": why}
    st.write("fits.json", json.dumps({"schema_version": 1, "segments": fits}, indent=2,
                                     sort_keys=True) + "\n")
    return st.rec


def run_quantify(cfg: PipelineConfig, out: Path) -> StageRecord:
    st = _Stage("quantify", out)
    q = cfg.quantify
    ds = _quant_dataset(cfg, out, st, "quantify")
    rule = _rule(cfg)
    results = []
    for p in q["procedures"]:
        if p["segment"] not in ds.segments:
            raise StageError("quantify", f"procedure {p['id']}: no segment {p['segment']!r} in dataset")
        try:
            results.append(quantify_procedure(ds.column(p["segment"]), float(p["pc"]), p["tavail"],
                                              q["families"], procedure=str(p["id"]), rule=rule))
        except ValueError as e:
            raise StageError("quantify", str(e))
    st.write(REPORT, report_json(hep_report(results)))
    st.write("sensitivity.csv", sensitivity_csv(results))
    return st.rec


def run_bn(cfg: PipelineConfig, out: Path) -> StageRecord:
    st = _Stage("bn", out)
    p = cfg.resolve(cfg.bn["report"]) if cfg.bn["report"] else out / REPORT
    if not p.is_file():
        raise StageError("bn", f"HEP report not found: {p}")
    st.input(p)
    records = records_from_report(json.loads(p.read_text()))
    net = build_from_heps(records)
    st.write("network.json", net.to_json())
    st.write("ranking.csv", ranking_csv(net))
    exact = float(infer(net, {}, OVERALL)[0])
    n = cfg.bn["mc_samples"]
    mc = monte_carlo_forward(net, n, cfg.seeds["sample"])
    k, phat = mc[OVERALL]
    summary = {"p_overall_exact": exact,
               "p_overall_series": series_failure([r.p_event for r in records]),
               "monte_carlo": {"n": n, "seed": cfg.seeds["sample"], "failures": k, "p_hat": phat,
                               "std_error": float(np.sqrt(exact * (1 - exact) / n))},
               "nodes": len(net)}
    st.write("bn_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return st.rec


RUNNERS = {"simulate": run_simulate, "augment": run_augment, "fit": run_fit,
           "quantify": run_quantify, "bn": run_bn}


def run_stage(name: str, cfg: PipelineConfig, out: Path) -> StageRecord:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rec = RUNNERS[name](cfg, out)
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_pipeline(cfg: PipelineConfig, out: Path) -> RunManifest:
    """Run the enabled stages in order; write ``manifest.json`` last.

    A failing stage stops the run; artifacts of earlier stages are kept and the
    manifest records the failure before the error propagates.
    """
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.digest(), __version__, [])
    wall = bool(cfg.settings["record_wall_times"])
    for name in STAGES:
        if not cfg.stages[name]:
            man.stages.append(StageRecord(name, "skipped"))
            continue
        try:
            man.stages.append(run_stage(name, cfg, out))
        except Exception as e:
            man.stages.append(StageRecord(name, "failed", error=str(e)))
            _json_dump(man.to_dict(wall), out / "manifest.json")
            raise
    _json_dump(man.to_dict(wall), out / "manifest.json")
    return man
