"""Procedural task graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

__all__ = ["STEP_KINDS", "RETRIEVAL_KINDS", "END", "Branch", "Step", "TaskModel"]

STEP_KINDS = (
    "aural-perceive",
    "verbal-respond",
    "button-press",
    "decide",
    "retrieve-parameter",
    "switch-procedure",
)
RETRIEVAL_KINDS = ("decide", "retrieve-parameter")

#: Branch target that ends the trial successfully.
END = "end"


@dataclass(frozen=True)
class Branch:
    """Routing after a retrieval step.

    ``slot`` names the slot of the retrieved chunk whose value selects the next
    step from ``cases``; unlisted values go to ``default`` (or the following
    step when ``default`` is None). ``on_failure`` is the recovery step taken
    when the retrieval fails; without it a failure is an omission error.
    """

    slot: str | None = None
    cases: Mapping[str, str] = field(default_factory=dict)
    default: str | None = None
    on_failure: str | None = None

    def targets(self):
        yield from self.cases.values()
        if self.default is not None:
            yield self.default
        if self.on_failure is not None:
            yield self.on_failure


@dataclass(frozen=True)
class Step:
    id: str
    kind: str
    segment: str
    request: Mapping[str, str] | None = None
    target: str | None = None
    utterances: int = 1
    branch: Branch | None = None

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValueError(f"step {self.id!r}: unknown kind {self.kind!r}")
        if self.kind in RETRIEVAL_KINDS and not self.request:
            raise ValueError(f"step {self.id!r}: {self.kind} needs a retrieval request")
        if self.branch is not None and self.kind not in RETRIEVAL_KINDS:
            raise ValueError(f"step {self.id!r}: only retrieval steps can branch")
        if self.utterances < 1:
            raise ValueError(f"step {self.id!r}: utterances must be >= 1")


@dataclass(frozen=True)
class TaskModel:
    """An ordered list of steps; execution falls through to the next step
    unless a branch redirects it. Branches may only jump forward, which
    keeps the step graph acyclic."""

    id: str
    steps: tuple[Step, ...]
    segments: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "segments", tuple(self.segments))
        self.validate()

    def validate(self):
        if not self.steps:
            raise ValueError(f"task {self.id!r} has no steps")
        index = {}
        for i, s in enumerate(self.steps):
            if s.id in index:
                raise ValueError(f"duplicate step id {s.id!r}")
            if s.id == END:
                raise ValueError(f"{END!r} is reserved")
            index[s.id] = i
            if s.segment not in self.segments:
                raise ValueError(f"step {s.id!r}: undeclared segment {s.segment!r}")
        for i, s in enumerate(self.steps):
            if s.branch is None:
                continue
            for tgt in s.branch.targets():
                if tgt == END:
                    continue
                if tgt not in index:
                    raise ValueError(f"step {s.id!r}: unknown branch target {tgt!r}")
                if index[tgt] <= i:
                    raise ValueError(f"step {s.id!r}: branch to {tgt!r} is not forward (cycle)")
        if len(set(self.segments)) != len(self.segments):
            raise ValueError("duplicate segment labels")

    def index(self, step_id: str) -> int:
        for i, s in enumerate(self.steps):
            if s.id == step_id:
                return i
        raise KeyError(step_id)

    @property
    def has_fallbacks(self) -> bool:
        return any(s.branch is not None and s.branch.on_failure for s in self.steps)
