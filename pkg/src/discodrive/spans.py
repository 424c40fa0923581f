"""Disfluency taxonomy: the five tagged categories plus the two post-hoc
injection kinds (replacement, restart)."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class DisfluencyType(enum.Enum):
    REPETITION = "repetition"
    FALSE_START = "false_start"
    FILLER = "filler"
    PAUSE = "pause"
    CORRECTION = "correction"
    REPLACEMENT = "replacement"
    RESTART = "restart"


#: Categories produced by the rule-based tagger.
TAGGED_KINDS = (
    DisfluencyType.REPETITION,
    DisfluencyType.FALSE_START,
    DisfluencyType.FILLER,
    DisfluencyType.PAUSE,
    DisfluencyType.CORRECTION,
)


class SpanSource(enum.Enum):
    TAGGED = "tagged"
    INJECTED = "injected"


@dataclass(frozen=True, order=True)
class DisfluencySpan:
    """Half-open character span [start, end) into the owning turn's text."""

    start: int
    end: int
    kind: DisfluencyType
    source: SpanSource = SpanSource.TAGGED

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span bounds [{self.start}, {self.end})")

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "start": self.start,
            "end": self.end,
            "source": self.source.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DisfluencySpan":
        return cls(
            start=int(obj["start"]),
            end=int(obj["end"]),
            kind=DisfluencyType(obj["kind"]),
            source=SpanSource(obj.get("source", "tagged")),
        )
