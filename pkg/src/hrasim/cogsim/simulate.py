"""Trial execution: walks a task graph on a simulated clock."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..dataset import TimeSeriesDataset, fmt_float
from .memory import (ChunkSpec, CognitiveParams, Failure, Retrieved, attempt_retrieval, candidates_for,
                     mismatches)
from .task import END, RETRIEVAL_KINDS, TaskModel

__all__ = ["TraceEvent", "TrialError", "CognitiveTrace", "BatchResult", "run_trial", "run_batch"]


@dataclass(frozen=True)
class TraceEvent:
    time: float
    step: str
    kind: str
    duration: float
    chunk: str | None = None
    mismatches: int = 0


@dataclass(frozen=True)
class TrialError:
    kind: str = "none"  # none | omission | commission
    step: str | None = None
    chunk: str | None = None

    def __str__(self):
        if self.kind == "none":
            return "none"
        if self.kind == "omission":
            return f"omission({self.step})"
        return f"commission({self.step},{self.chunk})"


NO_ERROR = TrialError()


@dataclass(frozen=True)
class CognitiveTrace:
    trial_id: int
    seed: int
    events: tuple[TraceEvent, ...]
    segment_durations: dict
    error: TrialError = NO_ERROR

    @property
    def total(self) -> float:
        t = 0.0
        for e in self.events:
            t += e.duration
        return t

    def to_csv_rows(self):
        for e in self.events:
            yield [self.trial_id, e.step, e.kind, fmt_float(e.time), fmt_float(e.duration), str(self.error)]


@dataclass(frozen=True)
class BatchResult:
    dataset: TimeSeriesDataset
    tally: dict
    traces: tuple[CognitiveTrace, ...] = field(repr=False, default=())

    def traces_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial_id", "step", "event", "start", "duration", "error"])
        for tr in self.traces:
            w.writerows(tr.to_csv_rows())
        return buf.getvalue()


class _Plan:
    """Per-task lookups shared by every trial of a batch."""

    def __init__(self, task: TaskModel, chunks: Sequence[ChunkSpec]):
        self.task = task
        self.chunks = tuple(chunks)
        self.index = {s.id: i for i, s in enumerate(task.steps)}
        self.cand = []
        self.cand_idx = []
        self.mm = []
        for s in task.steps:
            if s.kind in RETRIEVAL_KINDS:
                c = candidates_for(s.request, self.chunks)
                self.cand.append(c)
                self.cand_idx.append(np.array([self.chunks.index(x) for x in c], dtype=int))
                self.mm.append(np.array([mismatches(s.request, x) for x in c], dtype=float))
            else:
                self.cand.append(None)
                self.cand_idx.append(None)
                self.mm.append(None)


def run_trial(task: TaskModel, chunks: Sequence[ChunkSpec], params: CognitiveParams,
              seed: int, trial_id: int = 0) -> CognitiveTrace:
    """Simulate one trial. Identical arguments give an identical trace.

    Activation noise is pre-drawn as one standard-logistic variate per
    (step, chunk) pair, so every step sees the same draws regardless of the
    path taken through the task or of the noise scale.
    """
    return _run(_Plan(task, chunks), params, seed, trial_id)


def _run(plan: _Plan, params: CognitiveParams, seed: int, trial_id: int) -> CognitiveTrace:
    task = plan.task
    rng = np.random.default_rng(seed)
    noise = rng.logistic(0.0, 1.0, size=(len(task.steps), max(len(plan.chunks), 1)))
    clock = 0.0
    events: list[TraceEvent] = []
    seg = dict.fromkeys(task.segments, 0.0)
    error = NO_ERROR

    def emit(step, kind, dur, chunk=None, mm=0):
        nonlocal clock
        events.append(TraceEvent(clock, step.id, kind, dur, chunk, mm))
        seg[step.segment] += dur
        clock += dur

    i = 0
    while i < len(task.steps):
        step = task.steps[i]
        nxt = i + 1
        emit(step, "production", params.cycle_time)
        k = step.kind
        if k == "aural-perceive":
            emit(step, "aural-encode", params.aural_encode)
        elif k == "verbal-respond":
            emit(step, "speech", params.speech * step.utterances)
        elif k == "button-press":
            emit(step, "motor", params.motor_press)
        elif k == "switch-procedure":
            emit(step, "visual-encode", params.visual_encode)
            emit(step, "motor", params.motor_press)
        else:
            if k == "retrieve-parameter":
                emit(step, "visual-encode", params.visual_encode)
            cands = plan.cand[i]
            res = attempt_retrieval(step.request, cands, params, t_now=clock,
                                    noise=noise[i, plan.cand_idx[i]], mismatch_counts=plan.mm[i])
            br = step.branch
            if isinstance(res, Failure):
                emit(step, "retrieval-failure", res.latency)
                if br is not None and br.on_failure is not None:
                    nxt = _goto(plan, br.on_failure)
                else:
                    if error.kind == "none":
                        error = TrialError("omission", step.id)
                    break
            else:
                emit(step, "retrieval", res.latency, res.chunk.id, res.mismatches)
                if res.is_commission and error.kind == "none":
                    error = TrialError("commission", step.id, res.chunk.id)
                if br is not None and br.slot is not None:
                    val = res.chunk.slots.get(br.slot)
                    tgt = br.cases.get(val, br.default)
                    if tgt is not None:
                        nxt = _goto(plan, tgt)
        i = nxt
    return CognitiveTrace(trial_id, seed, tuple(events), seg, error)


def _goto(plan: _Plan, target: str) -> int:
    if target == END:
        return len(plan.task.steps)
    return plan.index[target]


def run_batch(task: TaskModel, chunks: Sequence[ChunkSpec], params: CognitiveParams,
              n: int, base_seed: int = 0, *, keep_traces: bool = True) -> BatchResult:
    """Run ``n`` trials with seeds ``base_seed .. base_seed + n - 1``.

    Only error-free trials become dataset rows; errors are tallied by kind.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    plan = _Plan(task, chunks)
    traces = [_run(plan, params, base_seed + j, j) for j in range(n)]
    tally = Counter({"none": 0, "omission": 0, "commission": 0})
    rows, ids = [], []
    for tr in traces:
        tally[tr.error.kind] += 1
        if tr.error.kind == "none":
            rows.append([tr.segment_durations[s] for s in task.segments])
            ids.append(tr.trial_id)
    values = np.array(rows, dtype=float).reshape(len(rows), len(task.segments))
    ds = TimeSeriesDataset(task.segments, values, "simulated", task.id, tuple(ids))
    return BatchResult(ds, dict(tally), tuple(traces) if keep_traces else ())
