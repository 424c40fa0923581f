"""Corpus data model, seven-domain taxonomy, JSONL serialization, validation.

Dialogs are immutable value objects. Constructors stay permissive about the
semantic invariants (alternation, turn-length set, span bounds) so that
externally produced files can be loaded and *reported on*; `validate_dialog`
turns invariant breaches into data, not exceptions.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .spans import DisfluencySpan

#: Turn counts permitted for generated dialogs.
ALLOWED_TURN_LENGTHS = (6, 8, 10, 12, 14)


class DomainTag(enum.Enum):
    NAVIGATION = "navigation"
    MAINTENANCE_DIAGNOSTICS = "maintenance_diagnostics"
    SAFETY_EMERGENCY = "safety_emergency"
    ENTERTAINMENT = "entertainment"
    LOCAL_ATTRACTIONS = "local_attractions"
    CAR_FUNCTIONS = "car_functions"
    WEATHER = "weather"

    @property
    def display_name(self) -> str:
        return _DOMAIN_DISPLAY[self]


_DOMAIN_DISPLAY = {
    DomainTag.NAVIGATION: "Navigation",
    DomainTag.MAINTENANCE_DIAGNOSTICS: "Car Maintenance and Diagnostics",
    DomainTag.SAFETY_EMERGENCY: "Safety and Emergency Assistance",
    DomainTag.ENTERTAINMENT: "Entertainment",
    DomainTag.LOCAL_ATTRACTIONS: "Local and On-Route Attractions and Activities",
    DomainTag.CAR_FUNCTIONS: "Car Functions",
    DomainTag.WEATHER: "Weather",
}


class Speaker(enum.Enum):
    DRIVER = "driver"
    CAR_AI = "car_ai"


@dataclass(frozen=True)
class Scenario:
    id: str
    domain: DomainTag
    text: str
    extra: dict = field(default_factory=dict, compare=True)

    def to_json(self) -> dict:
        obj = {"id": self.id, "domain": self.domain.value, "text": self.text}
        obj.update(self.extra)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Scenario":
        known = {"id", "domain", "text"}
        return cls(
            id=str(obj["id"]),
            domain=DomainTag(obj["domain"]),
            text=str(obj["text"]),
            extra={k: v for k, v in obj.items() if k not in known},
        )


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str
    turn_index: int
    disfluency_spans: tuple[DisfluencySpan, ...] = ()
    extra: dict = field(default_factory=dict, compare=True)

    def to_json(self) -> dict:
        obj = {
            "speaker": self.speaker.value,
            "text": self.text,
            "turn_index": self.turn_index,
            "disfluency_spans": [s.to_json() for s in self.disfluency_spans],
        }
        obj.update(self.extra)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Turn":
        known = {"speaker", "text", "turn_index", "disfluency_spans"}
        return cls(
            speaker=Speaker(obj["speaker"]),
            text=str(obj["text"]),
            turn_index=int(obj["turn_index"]),
            disfluency_spans=tuple(
                DisfluencySpan.from_json(s) for s in obj.get("disfluency_spans", [])
            ),
            extra={k: v for k, v in obj.items() if k not in known},
        )


@dataclass(frozen=True)
class Dialog:
    id: str
    domain: DomainTag
    scenario: Scenario
    turns: tuple[Turn, ...]
    num_turns: int
    extra: dict = field(default_factory=dict, compare=True)

    def to_json(self) -> dict:
        obj = {
            "id": self.id,
            "domain": self.domain.value,
            "scenario": self.scenario.to_json(),
            "num_turns": self.num_turns,
            "turns": [t.to_json() for t in self.turns],
        }
        obj.update(self.extra)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Dialog":
        known = {"id", "domain", "scenario", "num_turns", "turns"}
        return cls(
            id=str(obj["id"]),
            domain=DomainTag(obj["domain"]),
            scenario=Scenario.from_json(obj["scenario"]),
            turns=tuple(Turn.from_json(t) for t in obj["turns"]),
            num_turns=int(obj["num_turns"]),
            extra={k: v for k, v in obj.items() if k not in known},
        )


def make_dialog(
    id: str,
    domain: DomainTag,
    scenario: Scenario,
    turns: Iterable[Turn],
    extra: dict | None = None,
) -> Dialog:
    """Construct a Dialog with num_turns kept consistent."""
    tup = tuple(turns)
    return Dialog(
        id=id,
        domain=domain,
        scenario=scenario,
        turns=tup,
        num_turns=len(tup),
        extra=extra or {},
    )


@dataclass(frozen=True)
class Corpus:
    dialogs: tuple[Dialog, ...]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.dialogs)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    location: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_dialog(dialog: Dialog, strict_lengths: bool = True) -> ValidationReport:
    """Check every Dialog invariant; breaches are returned, never raised.

    With strict_lengths=False the turn-length-set rule is downgraded to a
    warning so that external corpora with arbitrary lengths can be ingested.
    """
    report = ValidationReport()

    def violation(code: str, location: str, message: str) -> None:
        report.violations.append(Violation(code, location, message))

    if dialog.num_turns != len(dialog.turns):
        violation(
            "TURN_COUNT",
            f"dialog {dialog.id}",
            f"num_turns={dialog.num_turns} but {len(dialog.turns)} turns present",
        )

    n = len(dialog.turns)
    length_rule = Violation(
        "TURN_LENGTH",
        f"dialog {dialog.id}",
        f"{n} turns not in allowed set {set(ALLOWED_TURN_LENGTHS)}",
    )
    if n not in ALLOWED_TURN_LENGTHS:
        if strict_lengths:
            report.violations.append(length_rule)
        else:
            report.warnings.append(length_rule)

    if not dialog.scenario.text.strip():
        violation("SCENARIO_EMPTY", f"dialog {dialog.id}", "scenario text is empty")
    if dialog.scenario.domain != dialog.domain:
        violation(
            "DOMAIN_MISMATCH",
            f"dialog {dialog.id}",
            f"scenario domain {dialog.scenario.domain.value} != dialog domain {dialog.domain.value}",
        )

    for i, turn in enumerate(dialog.turns):
        loc = f"dialog {dialog.id} turn {i}"
        if turn.turn_index != i:
            violation("TURN_INDEX", loc, f"turn_index={turn.turn_index}, expected {i}")
        if not turn.text.strip():
            violation("EMPTY_TEXT", loc, "turn text is empty after trimming")
        if i == 0:
            if turn.speaker != Speaker.DRIVER:
                violation("FIRST_SPEAKER", loc, "turn 0 must be the driver")
        elif turn.speaker == dialog.turns[i - 1].speaker:
            # reported on the second turn of the non-alternating pair
            violation("ALTERNATION", loc, f"consecutive {turn.speaker.value} turns")
        prev_end = -1
        for span in turn.disfluency_spans:
            if span.end > len(turn.text):
                violation("SPAN_BOUNDS", loc, f"span [{span.start},{span.end}) outside text")
            if span.start < prev_end:
                violation("SPAN_OVERLAP", loc, f"span [{span.start},{span.end}) overlaps previous")
            prev_end = max(prev_end, span.end)

    if dialog.turns and dialog.turns[-1].speaker != Speaker.CAR_AI:
        violation(
            "LAST_SPEAKER",
            f"dialog {dialog.id} turn {n - 1}",
            "final turn must be car_ai",
        )
    return report


def validate_corpus(corpus: Corpus, strict_lengths: bool = True) -> ValidationReport:
    """Per-dialog validation plus corpus-level id uniqueness."""
    merged = ValidationReport()
    seen: set[str] = set()
    for dialog in corpus.dialogs:
        if dialog.id in seen:
            merged.violations.append(
                Violation("DUPLICATE_ID", f"dialog {dialog.id}", "duplicate dialog id")
            )
        seen.add(dialog.id)
        rep = validate_dialog(dialog, strict_lengths=strict_lengths)
        merged.violations.extend(rep.violations)
        merged.warnings.extend(rep.warnings)
    return merged


# ---------------------------------------------------------------------------
# JSONL I/O
# ---------------------------------------------------------------------------

class CorpusParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class CorpusIntegrityError(ValueError):
    def __init__(self, dialog_id: str):
        super().__init__(f"duplicate dialog id {dialog_id!r}")
        self.dialog_id = dialog_id


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """One dialog object per line; non-empty provenance goes to a sidecar
    `<name>.meta.json` so the corpus file stays plain JSONL."""
    path = Path(path)
    seen: set[str] = set()
    for dialog in corpus.dialogs:
        if dialog.id in seen:
            raise CorpusIntegrityError(dialog.id)
        seen.add(dialog.id)
    with path.open("w", encoding="utf-8") as fh:
        for dialog in corpus.dialogs:
            fh.write(json.dumps(dialog.to_json(), ensure_ascii=False) + "\n")
    meta = _meta_path(path)
    if corpus.provenance:
        meta.write_text(
            json.dumps({"provenance": corpus.provenance}, ensure_ascii=False, indent=2),
            encoding="utf-8",
        )
    elif meta.exists():
        meta.unlink()


def read_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    dialogs: list[Dialog] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(str(exc), line=lineno) from exc
            try:
                dialog = Dialog.from_json(obj)
            except (KeyError, ValueError) as exc:
                raise CorpusParseError(f"bad dialog object: {exc}", line=lineno) from exc
            if dialog.id in seen:
                raise CorpusIntegrityError(dialog.id)
            seen.add(dialog.id)
            dialogs.append(dialog)
    provenance: dict = {}
    meta = _meta_path(path)
    if meta.exists():
        provenance = json.loads(meta.read_text(encoding="utf-8")).get("provenance", {})
    return Corpus(dialogs=tuple(dialogs), provenance=provenance)


def read_scenarios(path: str | Path) -> list[Scenario]:
    """Scenario JSONL reader (one scenario object per line)."""
    out: list[Scenario] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(Scenario.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise CorpusParseError(f"bad scenario object: {exc}", line=lineno) from exc
    return out


def write_scenarios(scenarios: Iterable[Scenario], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for sc in scenarios:
            fh.write(json.dumps(sc.to_json(), ensure_ascii=False) + "\n")
