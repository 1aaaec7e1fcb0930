import csv
import json
import math
import os

import pytest
import yaml

from hrasim import __version__
from hrasim.cli import ConfigError, StageError, load_config, parse_config, run_pipeline, run_stage
from hrasim.cli.main import main
from hrasim.dataset import TimeSeriesDataset
from hrasim.quantify import combine_hep, fmt3

SEEDS = {"simulate": 0, "train": 0, "generate": 0, "sample": 0}
PROCEDURES = [
    {"id": "E-0", "segment": "S1", "pc": 8.20e-3,
     "tavail": {"family": "lognormal", "mu_log": 3.50, "sigma_log": 0.5}},
    {"id": "E-1", "segment": "S2", "pc": 6.19e-3,
     "tavail": {"family": "lognormal", "mu_log": 6.0, "sigma_log": 0.15}},
    {"id": "ES-1.2", "segment": "S3", "pc": 8.20e-3,
     "tavail": {"family": "lognormal", "mu_log": 2.99, "sigma_log": 0.15}},
]


def fast_doc(**over):
    doc = {
        "schema_version": 1, "scenario": "builtin:exp1", "seeds": dict(SEEDS),
        "simulate": {"n_trials": 40},
        "augment": {"n_synthetic": 200, "kde_points": 50,
                    "stage1": {"epochs": 60}, "stage2": {"epochs": 40}},
        "quantify": {"procedures": PROCEDURES, "source": "simulated"},
        "bn": {"mc_samples": 20_000},
    }
    doc.update(over)
    return doc


def write_cfg(tmp_path, doc, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return p


def csv_rows(path):
    return [r for r in csv.reader(l for l in path.read_text().splitlines() if not l.startswith("#"))]


# ----------------------------------------------------------------- config

def test_shipped_configs_load():
    for name in ("exp1", "exp2", "exp3"):
        cfg = load_config(f"builtin:{name}")
        assert cfg.seeds == SEEDS
    assert not load_config("builtin:exp2").stages["quantify"]
    assert len(load_config("builtin:exp1").quantify["procedures"]) == 3


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d.pop("seeds"), "seeds"),
    (lambda d: d["seeds"].pop("train"), "seeds.train"),
    (lambda d: d["seeds"].update(train=-1), "seeds.train"),
    (lambda d: d.update(bogus=1), "bogus"),
    (lambda d: d["augment"].update(typo=1), "augment.typo"),
    (lambda d: d.update(schema_version=2), "schema_version"),
    (lambda d: d["simulate"].update(n_trials=0), "simulate.n_trials"),
    (lambda d: d["quantify"].update(families=[]), "quantify.families"),
    (lambda d: d["quantify"].update(families=["beta"]), "quantify.families"),
    (lambda d: d.update(scenario="missing.yaml"), "scenario"),
    (lambda d: d["augment"].update(source="nope.csv"), "augment.source"),
    (lambda d: d["augment"]["stage2"].update(z_dim=0), "augment.stage2.z_dim"),
    (lambda d: d.update(stages={"quantify": "yes"}), "stages.quantify"),
])
def test_config_errors_name_the_field(tmp_path, mutate, where):
    doc = fast_doc()
    mutate(doc)
    with pytest.raises(ConfigError) as e:
        load_config(write_cfg(tmp_path, doc))
    assert e.value.where.endswith(where)


def test_config_relative_paths_resolve_against_file(tmp_path):
    sub = tmp_path / "cfg"
    sub.mkdir()
    (sub / "data.csv").write_text("# provenance=simulated source=x\ntrial_id,S1\n0,1.0\n")
    cfg = load_config(write_cfg(sub, fast_doc(augment={"source": "data.csv"})))
    assert cfg.resolve(cfg.augment["source"]) == sub / "data.csv"


def test_config_hash_ignores_output_dir_and_tracks_seeds():
    a = parse_config(fast_doc(output_dir="a"))
    b = parse_config(fast_doc(output_dir="b"))
    assert a.digest() == b.digest()
    b.override_seed(7)
    assert a.digest() != b.digest() and set(b.seeds.values()) == {7}


# ----------------------------------------------------------------- stages

@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = parse_config(fast_doc())
    man = run_pipeline(cfg, out)
    return out, man


def test_simulate_five_rows(tmp_path):
    cfg = parse_config(fast_doc(simulate={"n_trials": 5}))
    rec = run_stage("simulate", cfg, tmp_path)
    ds = TimeSeriesDataset.read_csv(tmp_path / "simulated.csv")
    assert ds.values.shape == (5, 3) and ds.provenance == "simulated"
    summary = json.loads((tmp_path / "summary.json").read_text())
    for s in ("S1", "S2", "S3"):
        assert {"mean", "variance", "cv", "reference"} <= set(summary["segments"][s])
    again = run_stage("simulate", cfg, tmp_path / "again")
    assert rec.outputs == again.outputs


def test_augment_ten_synthetic_rows(tmp_path):
    doc = fast_doc()
    doc["augment"]["n_synthetic"] = 10
    cfg = parse_config(doc)
    run_stage("simulate", cfg, tmp_path)
    run_stage("augment", cfg, tmp_path)
    syn = TimeSeriesDataset.read_csv(tmp_path / "synthetic.csv")
    assert syn.values.shape == (10, 3) and syn.provenance == "synthetic"
    assert syn.segments == ("S1", "S2", "S3")
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert set(metrics["segments"]) == {"S1", "S2", "S3"}
    for seg in metrics["segments"].values():
        assert {"mae", "mse", "cv_source", "cv_synthetic"} <= set(seg)
    assert (tmp_path / "kde.csv").read_text().startswith("segment,grid,density_source,density_synthetic")
    assert json.loads((tmp_path / "model.json").read_text())["schema_version"] == 1


def test_augment_missing_dataset_errors(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, fast_doc())
    assert main(["augment", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "stage" and err["stage"] == "augment"
    assert "not found" in err["message"]


def test_quantify_report(pipeline_run):
    out, _ = pipeline_run
    rep = json.loads((out / "hep_report.json").read_text())
    assert [p["procedure"] for p in rep["procedures"]] == ["E-0", "E-1", "ES-1.2"]
    assert [p["pc"] for p in rep["procedures"]] == [8.20e-3, 6.19e-3, 8.20e-3]
    for p in rep["procedures"]:
        for fam in p["families"].values():
            if "p_event" in fam:
                assert fam["p_event"] == combine_hep(p["pc"], fam["pt"])
                assert fam["display"]["p_event"] == fmt3(fam["p_event"])
            else:
                assert fam["excluded"]
        d = p["representative"]["display"]
        assert all(len(v.split("e")[0].replace(".", "")) == 3 for v in d.values())
    rows = csv_rows(out / "sensitivity.csv")
    assert rows[0] == ["procedure", "distribution", "parameters", "status", "Pt", "HEP"]


def test_quantify_empty_family_list_rejected(tmp_path):
    doc = fast_doc()
    doc["quantify"]["families"] = []
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_bn_outputs(pipeline_run):
    out, _ = pipeline_run
    net = json.loads((out / "network.json").read_text())
    assert len(net["nodes"]) == 10
    rep = json.loads((out / "hep_report.json").read_text())
    series = 1 - math.prod(1 - p["representative"]["p_event"] for p in rep["procedures"])
    head = (out / "ranking.csv").read_text().splitlines()[0]
    assert abs(float(head.rsplit("=", 1)[1]) - series) < 1e-12
    summ = json.loads((out / "bn_summary.json").read_text())
    mc = summ["monte_carlo"]
    assert abs(mc["p_hat"] - summ["p_overall_exact"]) <= 4 * mc["std_error"]


def test_bn_missing_report(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, fast_doc())
    assert main(["bn", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 1
    assert json.loads(capsys.readouterr().err)["stage"] == "bn"


# ---------------------------------------------------------------- pipeline

def test_manifest_lists_five_stages(pipeline_run):
    out, man = pipeline_run
    doc = json.loads((out / "manifest.json").read_text())
    assert [s["name"] for s in doc["stages"]] == ["simulate", "augment", "fit", "quantify", "bn"]
    assert all(s["status"] == "ok" and s["outputs"] for s in doc["stages"])
    assert doc["tool_version"] == __version__
    assert "wall_time_s" not in doc["stages"][0]
    # manifest digests describe the files on disk
    from hrasim.cli import sha256_file
    for s in doc["stages"]:
        for name, dig in s["outputs"].items():
            assert sha256_file(out / name) == dig


def test_manifest_written_last(pipeline_run):
    out, _ = pipeline_run
    newest = max((p for p in out.iterdir()), key=lambda p: p.stat().st_mtime_ns)
    assert newest.name == "manifest.json"


def test_stage_toggle_marks_skipped(tmp_path):
    cfg = parse_config(fast_doc(stages={"fit": False, "bn": False}))
    run_pipeline(cfg, tmp_path)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    status = {s["name"]: s["status"] for s in doc["stages"]}
    assert status == {"simulate": "ok", "augment": "ok", "fit": "skipped", "quantify": "ok",
                      "bn": "skipped"}
    assert not (tmp_path / "fits.json").exists() and not (tmp_path / "network.json").exists()


def test_identical_rerun_identical_bytes(pipeline_run, tmp_path):
    out, _ = pipeline_run
    run_pipeline(parse_config(fast_doc()), tmp_path)
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted(p.name for p in tmp_path.iterdir())
    for n in names:
        assert (out / n).read_bytes() == (tmp_path / n).read_bytes(), n


def test_failure_aborts_and_keeps_prior_artifacts(tmp_path):
    doc = fast_doc()
    doc["quantify"]["procedures"] = [dict(PROCEDURES[0], segment="S9")]
    with pytest.raises(StageError):
        run_pipeline(parse_config(doc), tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    status = [s["status"] for s in man["stages"]]
    assert status == ["ok", "ok", "ok", "failed"]
    assert (tmp_path / "simulated.csv").exists() and not (tmp_path / "hep_report.json").exists()


def test_stage_isolation_writes_only_under_out(tmp_path, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    cfg_path = write_cfg(tmp_path, fast_doc(stages={"augment": False, "fit": False, "bn": False}))
    out = tmp_path / "out"
    assert main(["pipeline", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert list(work.iterdir()) == []
    assert sorted(os.listdir(tmp_path)) == ["cfg.yaml", "cwd", "out"]


# --------------------------------------------------------------------- main

def test_main_config_error_json(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "none.yaml")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"


def test_main_seed_override(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, fast_doc(simulate={"n_trials": 3}))
    assert main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "a"),
                 "--seed-override", "5"]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "simulated.csv").read_text()
    b = (tmp_path / "b" / "simulated.csv").read_text()
    assert a != b


def test_main_wall_times_opt_in(tmp_path):
    cfg_path = write_cfg(tmp_path, fast_doc(record_wall_times=True,
                                            stages={"augment": False, "fit": False,
                                                    "quantify": False, "bn": False}))
    assert main(["pipeline", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert doc["stages"][0]["wall_time_s"] >= 0
