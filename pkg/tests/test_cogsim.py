import math
from importlib import resources

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from hrasim.cogsim import (NO_TRACE, Branch, ChunkSpec, CognitiveParams, Failure, Retrieved, Step,
                           TaskModel, attempt_retrieval, base_level_activation, batch_summary,
                           builtin_scenario, load_scenario, match_score, run_batch, run_trial)
from hrasim.cogsim.scenario import ScenarioError, parse_scenario
from hrasim.dataset import TimeSeriesDataset

QUIET = dict(noise=0.0, latency_factor=1.0, latency_exponent=1.0)


def chunk(cid="c", history=(-1.0,), **slots):
    return ChunkSpec(cid, slots or {"isa": "fact", "v": cid}, tuple(history))


# ------------------------------------------------------------ base level

def test_base_level_single_use_one_second_ago_is_zero():
    assert base_level_activation([9.0], 0.5, 10.0) == 0.0


def test_base_level_four_seconds():
    assert base_level_activation([6.0], 0.5, 10.0) == pytest.approx(math.log(4 ** -0.5), abs=1e-12)
    assert base_level_activation([6.0], 0.5, 10.0) == pytest.approx(-0.6931, abs=1e-4)


def test_base_level_empty_history_is_no_trace():
    assert base_level_activation([], 0.5, 10.0) == NO_TRACE == -math.inf


def test_base_level_rejects_future_use():
    with pytest.raises(ValueError):
        base_level_activation([11.0], 0.5, 10.0)


@given(st.lists(st.floats(0.01, 1e4), min_size=1, max_size=20), st.floats(0.05, 0.95))
def test_base_level_matches_direct_sum(ages, d):
    t = 1e4 + 1.0
    hist = sorted(t - a for a in ages)
    want = math.log(math.fsum((t - h) ** -d for h in hist))
    assert base_level_activation(hist, d, t) == pytest.approx(want, rel=1e-10, abs=1e-10)


# ---------------------------------------------------------- partial matching

def test_match_score_examples():
    c = ChunkSpec("c", {"isa": "check", "item": "a", "limit": "x"}, (-1.0,))
    assert match_score({"isa": "check", "item": "a"}, c, CognitiveParams(mismatch_penalty=1.0)) == 0.0
    assert match_score({"item": "b", "limit": "y"}, c, CognitiveParams(mismatch_penalty=1.0)) == -2.0
    assert match_score({"item": "b"}, c, CognitiveParams(mismatch_penalty=0.5)) == -0.5


def test_match_score_missing_slot_counts_as_mismatch():
    c = ChunkSpec("c", {"isa": "check"}, (-1.0,))
    assert match_score({"colour": "red"}, c, CognitiveParams(mismatch_penalty=1.0)) == -1.0


def test_match_score_empty_request_rejected():
    with pytest.raises(ValueError):
        match_score({}, chunk(), CognitiveParams())


# ------------------------------------------------------------------ retrieval

def test_retrieval_exact_match_latency_one_second():
    p = CognitiveParams(threshold=-1.0, **QUIET)
    r = attempt_retrieval({"isa": "fact", "v": "c"}, [chunk()], p, t_now=0.0)
    assert isinstance(r, Retrieved) and not r.is_commission
    assert r.latency == pytest.approx(1.0, abs=1e-12)


def test_retrieval_below_threshold_fails_with_timeout():
    p = CognitiveParams(threshold=0.0, **QUIET)
    c = chunk(history=(-math.exp(4.0),))  # A = -0.5 * 4 = -2
    r = attempt_retrieval({"isa": "fact"}, [c], p, t_now=0.0)
    assert isinstance(r, Failure)
    assert r.best_activation == pytest.approx(-2.0, abs=1e-12)
    assert r.latency == pytest.approx(p.latency_factor * math.exp(-p.latency_exponent * p.threshold))


def test_retrieval_empty_chunk_set_fails():
    p = CognitiveParams(**QUIET)
    assert attempt_retrieval({"isa": "fact"}, [], p) == Failure(p.timeout)
    # isa is a hard filter
    assert isinstance(attempt_retrieval({"isa": "other"}, [chunk()], p), Failure)


def test_retrieval_failure_rate_half_at_threshold():
    p = CognitiveParams(threshold=0.0, noise=0.4)
    rng = np.random.default_rng(123)
    n = 100_000
    fails = sum(isinstance(attempt_retrieval({"isa": "fact"}, [chunk()], p, rng, t_now=0.0), Failure)
                for _ in range(n))
    assert abs(fails / n - 0.5) < 0.01


def test_retrieval_partial_match_gives_commission():
    p = CognitiveParams(threshold=-5.0, mismatch_penalty=1.0, **QUIET)
    wrong = ChunkSpec("w", {"isa": "fact", "v": "x"}, (-0.01,))
    r = attempt_retrieval({"isa": "fact", "v": "absent"}, [wrong], p, t_now=0.0)
    assert isinstance(r, Retrieved) and r.is_commission and r.mismatches == 1


@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(0.1, 2))
def test_latency_law_noise_off(a, F, f):
    p = CognitiveParams(threshold=-10.0, noise=0.0, latency_factor=F, latency_exponent=f)
    c = chunk(history=(-math.exp(-2 * a),))  # base level exactly a at d=0.5
    r = attempt_retrieval({"isa": "fact"}, [c], p, t_now=0.0)
    assert r.latency == pytest.approx(F * math.exp(-f * r.activation), rel=1e-12)
    assert r.activation == pytest.approx(a, abs=1e-12)


# -------------------------------------------------------------------- trials

def one_step_task(kind="button-press"):
    return TaskModel("t", (Step("s", kind, "S1"),), ("S1",))


def test_one_step_press_is_cycle_plus_motor():
    p = CognitiveParams(noise=0.0, cycle_time=0.05, motor_press=0.3)
    tr = run_trial(one_step_task(), [], p, seed=0)
    assert tr.total == pytest.approx(0.35, abs=1e-15)
    assert tr.segment_durations == {"S1": tr.total}
    assert tr.error.kind == "none"


def test_omission_terminates_trial():
    task = TaskModel("t", (Step("r", "decide", "S1", request={"isa": "fact"}),
                           Step("p", "button-press", "S1")), ("S1",))
    p = CognitiveParams(threshold=0.0, **QUIET)
    tr = run_trial(task, [chunk(history=(-1e6,))], p, seed=0)
    assert tr.error.kind == "omission" and tr.error.step == "r"
    assert all(e.step == "r" for e in tr.events)


def test_failure_with_fallback_is_not_omission():
    task = TaskModel("t", (Step("r", "decide", "S1", request={"isa": "fact"},
                                branch=Branch(on_failure="p")),
                           Step("x", "verbal-respond", "S1"),
                           Step("p", "button-press", "S1")), ("S1",))
    p = CognitiveParams(threshold=0.0, **QUIET)
    tr = run_trial(task, [chunk(history=(-1e6,))], p, seed=0)
    assert tr.error.kind == "none"
    assert [e.step for e in tr.events][-1] == "p"
    assert "x" not in {e.step for e in tr.events}


def test_commission_trace_contains_mismatching_retrieval():
    sc = builtin_scenario("exp3")
    res = run_batch(sc.task, sc.chunks, sc.params, 400, 0)
    com = [t for t in res.traces if t.error.kind == "commission"]
    assert com, "expected some commission errors in 400 trials"
    for t in com:
        assert any(e.kind == "retrieval" and e.mismatches > 0 and e.step == t.error.step
                   for e in t.events)


@pytest.mark.parametrize("name", ["exp1", "exp2", "exp3"])
def test_trace_additivity_and_partition(name):
    sc = builtin_scenario(name)
    for seed in range(30):
        tr = run_trial(sc.task, sc.chunks, sc.params, seed)
        clock = 0.0
        for e in tr.events:
            assert e.time == clock
            clock += e.duration
        assert tr.total == clock
        assert math.fsum(tr.segment_durations.values()) == pytest.approx(tr.total, rel=1e-14)
        times = [e.time for e in tr.events]
        assert times == sorted(times)


def test_trial_determinism():
    sc = builtin_scenario("exp1")
    assert run_trial(sc.task, sc.chunks, sc.params, 7) == run_trial(sc.task, sc.chunks, sc.params, 7)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["exp1", "exp3"]), st.floats(-1.0, 0.5), st.floats(0.05, 1.0))
def test_raising_threshold_never_reduces_omissions(name, tau, step):
    sc = builtin_scenario(name)
    lo = run_batch(sc.task, sc.chunks, sc.with_params(threshold=tau).params, 150, 0, keep_traces=False)
    hi = run_batch(sc.task, sc.chunks, sc.with_params(threshold=tau + step).params, 150, 0,
                   keep_traces=False)
    assert hi.tally["omission"] >= lo.tally["omission"]


# --------------------------------------------------------------------- batches

def test_batch_exp1_forty_rows():
    sc = builtin_scenario("exp1")
    res = run_batch(sc.task, sc.chunks, sc.params, 40, 0)
    assert res.dataset.values.shape == (40, 3)
    assert res.dataset.segments == ("S1", "S2", "S3")
    assert sum(res.tally.values()) == 40


def test_batch_of_one_equals_trial():
    sc = builtin_scenario("exp3")
    res = run_batch(sc.task, sc.chunks, sc.params, 1, 11)
    assert res.traces[0] == run_trial(sc.task, sc.chunks, sc.params, 11, 0)


def test_batch_noise_off_rows_identical():
    sc = builtin_scenario("exp1")
    p = sc.with_params(noise=0.0).params
    res = run_batch(sc.task, sc.chunks, p, 5, 0)
    assert len(res.dataset) == 5
    assert np.all(res.dataset.values == res.dataset.values[0])


def test_batch_rejects_zero_trials():
    sc = builtin_scenario("exp3")
    with pytest.raises(ValueError):
        run_batch(sc.task, sc.chunks, sc.params, 0)


def test_batch_all_errors_gives_empty_dataset():
    sc = builtin_scenario("exp3")
    res = run_batch(sc.task, sc.chunks, sc.with_params(threshold=50.0).params, 10, 0)
    assert len(res.dataset) == 0 and res.tally["omission"] == 10


def test_batch_summary_fields():
    sc = builtin_scenario("exp3")
    res = run_batch(sc.task, sc.chunks, sc.params, 50, 0)
    s = batch_summary(res, sc)
    e = s["segments"]["S1"]
    x = res.dataset.column("S1")
    assert e["mean"] == pytest.approx(x.mean()) and e["variance"] == pytest.approx(x.var())
    assert e["cv"] == pytest.approx(x.std() / x.mean())
    assert e["reference"]["simulated_mean"] == 2.1723
    assert s["n_trials"] == 50


def test_dataset_csv_roundtrip(tmp_path):
    sc = builtin_scenario("exp1")
    ds = run_batch(sc.task, sc.chunks, sc.params, 5, 0).dataset
    p = tmp_path / "d.csv"
    ds.to_csv(p)
    back = TimeSeriesDataset.read_csv(p)
    assert back.segments == ds.segments and back.provenance == "simulated"
    assert np.array_equal(back.values, ds.values)


def test_traces_csv_header():
    sc = builtin_scenario("exp3")
    res = run_batch(sc.task, sc.chunks, sc.params, 2, 0)
    assert res.traces_csv().splitlines()[0] == "trial_id,step,event,start,duration,error"


# ------------------------------------------------------------------- scenarios

def test_scenario_missing_field_diagnostic():
    with pytest.raises(ScenarioError, match="steps"):
        parse_scenario({"schema_version": 1, "id": "x", "segments": ["S1"], "chunks": []}, "f.yaml")


def test_scenario_bad_version():
    with pytest.raises(ScenarioError, match="schema_version"):
        parse_scenario({"schema_version": 9}, "f.yaml")


def test_scenario_missing_calibration():
    doc = yaml.safe_load(resources.files("hrasim.data").joinpath("scenarios", "exp3.yaml").read_text())
    del doc["calibration"]["speech"]
    with pytest.raises(ScenarioError, match="calibration.speech"):
        parse_scenario(doc, "f.yaml")


def test_scenario_file_roundtrip(tmp_path):
    text = resources.files("hrasim.data").joinpath("scenarios", "exp2.yaml").read_text()
    p = tmp_path / "exp2.yaml"
    p.write_text(text)
    a, b = load_scenario(p), builtin_scenario("exp2")
    assert a.task == b.task and a.params == b.params


def test_params_validation():
    with pytest.raises(ValueError):
        CognitiveParams(decay=1.0)
    with pytest.raises(ValueError):
        CognitiveParams(motor_press=0.0)
    with pytest.raises(ValueError):
        CognitiveParams(noise=-0.1)
