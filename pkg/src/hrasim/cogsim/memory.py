"""Declarative memory: base-level activation, partial matching and retrieval.

Activation of a chunk ``i`` for a retrieval request at time ``t`` is::

    A_i = ln(sum_j (t - t_j) ** -d) - P_mm * mismatches_i + eps_i

with ``eps_i`` drawn from a logistic distribution of scale ``s``. The most
active candidate is retrieved when ``A_i >= tau`` and takes ``F * exp(-f * A_i)``
seconds; otherwise the request fails after ``F * exp(-f * tau)`` seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "ChunkSpec",
    "CognitiveParams",
    "NO_TRACE",
    "Retrieved",
    "Failure",
    "base_level_activation",
    "match_score",
    "attempt_retrieval",
]

#: Activation of a chunk that has never been used.
NO_TRACE = -math.inf


_HISTORIES: dict[tuple, np.ndarray] = {}


def _intern(hist: tuple) -> np.ndarray:
    # chunks with equal histories share one array, so activations can be memoized by identity
    arr = _HISTORIES.get(hist)
    if arr is None:
        arr = _HISTORIES[hist] = np.asarray(hist, dtype=float)
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChunkSpec:
    """A declarative memory chunk with its use history (simulation clock, s)."""

    id: str
    slots: Mapping[str, str]
    use_history: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.slots:
            raise ValueError(f"chunk {self.id!r} has no slots")
        object.__setattr__(self, "slots", dict(self.slots))
        hist = tuple(float(t) for t in self.use_history)
        if any(b <= a for a, b in zip(hist, hist[1:])):
            raise ValueError(f"chunk {self.id!r}: use history must be strictly increasing")
        object.__setattr__(self, "use_history", hist)
        object.__setattr__(self, "_history", _intern(hist))

    def __hash__(self):
        return hash(self.id)

    def activation(self, t_now: float, decay: float) -> float:
        return base_level_activation(self._history, decay, t_now)


@dataclass(frozen=True)
class CognitiveParams:
    """Architecture parameters. Times are in seconds.

    The perceptual-motor times (``motor_press``, ``speech``, ``visual_encode``,
    ``aural_encode``) are calibration constants and are normally read from a
    scenario file.
    """

    decay: float = 0.5
    noise: float = 0.25
    threshold: float = 0.0
    latency_factor: float = 1.0
    latency_exponent: float = 1.0
    mismatch_penalty: float = 1.0
    cycle_time: float = 0.050
    motor_press: float = 0.30
    speech: float = 1.50
    visual_encode: float = 0.085
    aural_encode: float = 0.30

    def __post_init__(self):
        for name in ("latency_factor", "cycle_time", "motor_press", "speech",
                     "visual_encode", "aural_encode"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if self.mismatch_penalty < 0:
            raise ValueError("mismatch_penalty must be >= 0")

    def retrieval_latency(self, activation: float) -> float:
        return self.latency_factor * math.exp(-self.latency_exponent * activation)

    @property
    def timeout(self) -> float:
        """Time spent on a failed retrieval."""
        return self.retrieval_latency(self.threshold)


def base_level_activation(history: Sequence[float], d: float, t_now: float) -> float:
    """Power-law base-level learning, ``ln sum_j (t_now - t_j)^-d``.

    Returns :data:`NO_TRACE` (``-inf``) for an empty history.
    """
    h = np.asarray(history, dtype=float)
    if h.size == 0:
        return NO_TRACE
    age = t_now - h
    if age.min() <= 0:
        raise ValueError("all use times must precede t_now")
    return math.log(float(np.sum(age ** -d)))


def match_score(request: Mapping[str, str], chunk: ChunkSpec, params: CognitiveParams) -> float:
    """Partial-matching penalty: ``-P_mm`` per requested slot the chunk does not match.

    A slot the chunk lacks counts as a mismatch.
    """
    if not request:
        raise ValueError("empty retrieval request")
    return -params.mismatch_penalty * mismatches(request, chunk)


def mismatches(request: Mapping[str, str], chunk: ChunkSpec) -> int:
    return sum(1 for k, v in request.items() if chunk.slots.get(k) != v)


@dataclass(frozen=True)
class Retrieved:
    chunk: ChunkSpec
    activation: float
    latency: float
    mismatches: int = 0

    @property
    def is_commission(self) -> bool:
        return self.mismatches > 0


@dataclass(frozen=True)
class Failure:
    latency: float
    best_activation: float = NO_TRACE


def candidates_for(request: Mapping[str, str], chunks: Sequence[ChunkSpec]) -> list[ChunkSpec]:
    """Chunks eligible for a request. ``isa`` is a hard type constraint."""
    kind = request.get("isa")
    if kind is None:
        return list(chunks)
    return [c for c in chunks if c.slots.get("isa") == kind]


def attempt_retrieval(
    request: Mapping[str, str],
    chunks: Sequence[ChunkSpec],
    params: CognitiveParams,
    rng: np.random.Generator | None = None,
    *,
    t_now: float = 0.0,
    noise: np.ndarray | None = None,
    mismatch_counts: np.ndarray | None = None,
) -> Retrieved | Failure:
    """Retrieve the most active chunk matching ``request``.

    Parameters
    ----------
    request : mapping
        Slot/value pairs. An ``isa`` entry restricts the candidate set.
    chunks : sequence of ChunkSpec
        Declarative memory contents.
    params : CognitiveParams
    rng : numpy Generator, optional
        Source of activation noise. Ignored when ``noise`` is given or
        ``params.noise == 0``.
    t_now : float
        Simulation clock at the time of the request.
    noise : array, optional
        Pre-drawn *standard* logistic variates, one per candidate; they are
        scaled by ``params.noise``. Used by the trial runner for common random
        numbers.
    mismatch_counts : array, optional
        Precomputed per-candidate mismatch counts for this request.
    """
    cands = candidates_for(request, chunks)
    if not cands:
        return Failure(params.timeout)
    memo: dict[int, float] = {}
    base = []
    for c in cands:
        key = id(c._history)
        if key not in memo:
            memo[key] = c.activation(t_now, params.decay)
        base.append(memo[key])
    if mismatch_counts is None:
        mismatch_counts = np.array([mismatches(request, c) for c in cands])
    acts = np.array(base) - params.mismatch_penalty * mismatch_counts
    if params.noise > 0:
        if noise is None:
            if rng is None:
                raise ValueError("rng required when noise is on")
            noise = rng.logistic(0.0, 1.0, size=len(cands))
        acts = acts + params.noise * np.asarray(noise[: len(cands)])
    best = int(np.argmax(acts))
    a = float(acts[best])
    if a >= params.threshold:
        chunk = cands[best]
        return Retrieved(chunk, a, params.retrieval_latency(a), int(mismatch_counts[best]))
    return Failure(params.timeout, a)
