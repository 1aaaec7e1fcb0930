"""Fit the perceptual-motor constants to target segment means.

Every segment mean is affine in the four calibrated times (aural encode,
visual encode, motor press, speech): the production cycles and retrieval
latencies form the intercept and the event counts the slopes. Intercept and
slopes are measured from a simulated batch, then a bounded, ridge-regularised
linear least-squares problem in relative error is solved. The loop repeats
because retrieval latencies depend weakly on the clock.
"""

from __future__ import annotations

import dataclasses
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import lsq_linear

from .scenario import CALIBRATED, Scenario
from .simulate import run_batch

__all__ = ["segment_design", "calibrate"]

_EVENT_OF = {"aural_encode": "aural-encode", "visual_encode": "visual-encode",
             "motor_press": "motor", "speech": "speech"}


def segment_design(scenario: Scenario, n: int, base_seed: int = 0):
    """Return (mean durations, intercepts, count matrix) per segment.

    The count matrix has one column per calibrated constant, in
    ``CALIBRATED`` order; speech counts are in utterances.
    """
    p = scenario.params
    res = run_batch(scenario.task, scenario.chunks, p, n, base_seed)
    segs = scenario.task.segments
    step_seg = {s.id: s.segment for s in scenario.task.steps}
    step_utt = {s.id: s.utterances for s in scenario.task.steps}
    counts = np.zeros((len(segs), len(CALIBRATED)))
    good = [tr for tr in res.traces if tr.error.kind == "none"]
    for tr in good:
        for e in tr.events:
            for j, name in enumerate(CALIBRATED):
                if e.kind == _EVENT_OF[name]:
                    w = step_utt[e.step] if name == "speech" else 1
                    counts[segs.index(step_seg[e.step]), j] += w
    counts /= len(good)
    means = res.dataset.values.mean(axis=0)
    c = np.array([getattr(p, k) for k in CALIBRATED])
    return means, means - counts @ c, counts


def calibrate(scenarios: Sequence[Scenario], targets: Mapping[str, Mapping[str, float]],
              prior: Mapping[str, float], *, n: int = 2000, ridge: float = 0.05,
              iterations: int = 3, bounds=(0.05, 5.0)) -> dict:
    """Shared calibration constants for several scenarios.

    ``targets[scenario_id][segment]`` is the desired mean. ``prior`` pulls the
    solution towards plausible values with weight ``ridge`` (relative units).
    """
    c = {k: float(prior[k]) for k in CALIBRATED}
    c0 = np.array([prior[k] for k in CALIBRATED])
    for _ in range(iterations):
        rows, rhs = [], []
        for sc in scenarios:
            sc = dataclasses.replace(sc, params=dataclasses.replace(sc.params, **c))
            _, icpt, counts = segment_design(sc, n)
            for k, seg in enumerate(sc.task.segments):
                tgt = targets[sc.id][seg]
                rows.append(counts[k] / tgt)
                rhs.append(1.0 - icpt[k] / tgt)
        A = np.vstack([np.array(rows), ridge * np.diag(1.0 / c0)])
        b = np.concatenate([rhs, ridge * np.ones(len(c0))])
        sol = lsq_linear(A, b, bounds=bounds)
        c = dict(zip(CALIBRATED, map(float, sol.x)))
    return c
