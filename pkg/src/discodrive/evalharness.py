"""Stratified sampling, pair construction, rating aggregation, and in-car
subset filtering — the machinery behind the human- and automatic-evaluation
protocols.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import ALLOWED_TURN_LENGTHS, Corpus, Dialog, DomainTag

# ---------------------------------------------------------------------------
# Rating records and metric registries
# ---------------------------------------------------------------------------

INTRINSIC_METRICS = (
    "naturalness",
    "coherence",
    "engagement",
    "consistency",
    "on_topic",
    "disfluency_realism",
)
PAIRWISE_METRICS = (
    "overall",
    "naturalness",
    "task_effectiveness",
    "human_likeness",
    "engagement",
)
DISFLUENCY_INTEGRATION_METRICS = ("naturalness", "appropriateness", "clarity")

METRIC_SETS: dict[str, tuple[str, ...]] = {
    "intrinsic": INTRINSIC_METRICS,
    "pairwise": PAIRWISE_METRICS,
    "disfluency_integration": DISFLUENCY_INTEGRATION_METRICS,
}

#: Likert anchor labels shown to annotators (1 = left, 5 = right).
LIKERT_ANCHORS: dict[tuple[str, str], tuple[str, str]] = {
    ("intrinsic", "naturalness"): ("robotic/artificial", "completely natural"),
    ("intrinsic", "coherence"): ("disjointed/confusing", "clear/logical flow"),
    ("intrinsic", "engagement"): ("boring/monotonous", "lively/engaging"),
    ("intrinsic", "consistency"): ("frequent contradictions", "fully consistent"),
    ("intrinsic", "on_topic"): ("off-topic frequently", "fully on-topic"),
    ("intrinsic", "disfluency_realism"): (
        "forced/unnecessary disfluencies",
        "natural disfluencies that enhance realism",
    ),
    ("disfluency_integration", "naturalness"): (
        "disfluencies appear forced or out-of-place",
        "disfluencies blend seamlessly with natural speech patterns",
    ),
    ("disfluency_integration", "appropriateness"): (
        "disfluencies are contextually irrelevant or inappropriate",
        "disfluencies are perfectly suited to the dialog context",
    ),
    ("disfluency_integration", "clarity"): (
        "disfluencies significantly hinder understanding",
        "disfluencies do not detract from clarity",
    ),
}

PAIRWISE_PROMPTS: dict[str, str] = {
    "overall": "Which dialogue feels more natural and human-like overall?",
    "naturalness": "Which dialogue flows more like a natural conversation?",
    "task_effectiveness": "Which dialogue better helps the driver achieve their goal?",
    "human_likeness": "Which driver's utterances feel more realistic and human-like?",
    "engagement": "Which conversation is more lively and engaging?",
}


class RatingValidationError(ValueError):
    pass


@dataclass(frozen=True)
class RatingRecord:
    evaluator_id: str
    item_id: str
    metric_name: str
    value: int | None = None      # Likert 1..5
    choice: str | None = None     # "A" | "B"
    timestamp: float | None = None
    session_id: str | None = None

    def __post_init__(self) -> None:
        if (self.value is None) == (self.choice is None):
            raise RatingValidationError("exactly one of value/choice must be set")
        if self.value is not None and not 1 <= self.value <= 5:
            raise RatingValidationError(f"Likert value {self.value} outside [1, 5]")
        if self.choice is not None and self.choice not in ("A", "B"):
            raise RatingValidationError(f"choice must be A or B, got {self.choice!r}")

    def to_json(self) -> dict:
        obj: dict = {
            "evaluator_id": self.evaluator_id,
            "item_id": self.item_id,
            "metric_name": self.metric_name,
        }
        if self.value is not None:
            obj["value"] = self.value
        if self.choice is not None:
            obj["choice"] = self.choice
        if self.timestamp is not None:
            obj["timestamp"] = self.timestamp
        if self.session_id is not None:
            obj["session_id"] = self.session_id
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "RatingRecord":
        return cls(
            evaluator_id=str(obj["evaluator_id"]),
            item_id=str(obj["item_id"]),
            metric_name=str(obj["metric_name"]),
            value=obj.get("value"),
            choice=obj.get("choice"),
            timestamp=obj.get("timestamp"),
            session_id=obj.get("session_id"),
        )


def validate_record_for_mode(record: RatingRecord, mode: str) -> None:
    metrics = METRIC_SETS.get(mode)
    if metrics is None:
        raise RatingValidationError(f"unknown mode {mode!r}")
    if record.metric_name not in metrics:
        raise RatingValidationError(
            f"metric {record.metric_name!r} is not registered for mode {mode!r}"
        )
    if mode == "pairwise" and record.choice is None:
        raise RatingValidationError("pairwise ratings must carry a choice")
    if mode != "pairwise" and record.value is None:
        raise RatingValidationError(f"{mode} ratings must carry a Likert value")


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggregationParams:
    ci_z: float = 1.96

    def __post_init__(self) -> None:
        if self.ci_z <= 0:
            raise ValueError("ci_z must be > 0")


class InsufficientDataError(ValueError):
    def __init__(self, metric: str, count: int):
        super().__init__(f"metric {metric!r} has {count} value(s); need at least 2")
        self.metric = metric
        self.count = count


@dataclass(frozen=True)
class LikertSummary:
    mean: float
    half_width: float
    count: int

    def render(self) -> str:
        return f"{self.mean:.1f} (±{self.half_width:.2f})"


def aggregate_likert(
    records: Iterable[RatingRecord],
    params: AggregationParams | None = None,
    allow_partial: bool = False,
) -> dict[str, LikertSummary]:
    """Pooled (evaluator x item) mean and normal-approximation CI half-width
    z * sd / sqrt(N), with the sample standard deviation (ddof=1)."""
    params = params or AggregationParams()
    by_metric: dict[str, list[int]] = {}
    for rec in records:
        if rec.value is not None:
            by_metric.setdefault(rec.metric_name, []).append(rec.value)
    out: dict[str, LikertSummary] = {}
    for metric in sorted(by_metric):
        values = by_metric[metric]
        n = len(values)
        if n < 2:
            if allow_partial:
                continue
            raise InsufficientDataError(metric, n)
        mean = math.fsum(values) / n
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        half = params.ci_z * math.sqrt(var) / math.sqrt(n)
        out[metric] = LikertSummary(mean=mean, half_width=half, count=n)
    return out


def aggregate_pairwise(records: Iterable[RatingRecord]) -> dict[str, dict[str, int]]:
    """Raw per-evaluator choice counts per metric; counts sum to the number
    of submitted choices."""
    out: dict[str, dict[str, int]] = {}
    for rec in records:
        if rec.choice is None:
            continue
        counts = out.setdefault(rec.metric_name, {"A": 0, "B": 0})
        counts[rec.choice] += 1
    return out


def aggregate_pairwise_majority(
    records: Iterable[RatingRecord],
) -> dict[str, dict[str, int]]:
    """Per-item majority view across evaluators; ties surfaced explicitly."""
    votes: dict[tuple[str, str], list[str]] = {}
    for rec in records:
        if rec.choice is not None:
            votes.setdefault((rec.metric_name, rec.item_id), []).append(rec.choice)
    out: dict[str, dict[str, int]] = {}
    for (metric, _item), choices in sorted(votes.items()):
        counts = out.setdefault(metric, {"A": 0, "B": 0, "ties": 0})
        a = choices.count("A")
        b = choices.count("B")
        if a > b:
            counts["A"] += 1
        elif b > a:
            counts["B"] += 1
        else:
            counts["ties"] += 1
    return out


# ---------------------------------------------------------------------------
# Stratified sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StratumSpec:
    key: tuple
    count: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("stratum count must be >= 0")


class StratumError(ValueError):
    def __init__(self, stratum: tuple, available: int, needed: int):
        super().__init__(
            f"stratum {stratum} has {available} dialog(s); {needed} needed"
        )
        self.stratum = stratum
        self.available = available
        self.needed = needed


class SplitError(ValueError):
    def __init__(self, split: str, available: int, needed: int):
        super().__init__(f"split {split!r} has {available} dialog(s); {needed} needed")
        self.split = split
        self.available = available
        self.needed = needed


def _stratum_rng(seed: int, *parts: object) -> random.Random:
    joined = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(joined.encode("utf-8")).digest()
    return random.Random(seed ^ int.from_bytes(digest[:8], "big"))


def sample_discodrive(
    corpus: Corpus | Sequence[Dialog], seed: int, per_stratum: int = 4
) -> list[Dialog]:
    """The synthetic-corpus protocol: per_stratum dialogs from every
    (domain, turn-length) stratum — 7 x 5 x 4 = 140 with the defaults.
    Selection within a stratum is a seeded uniform draw without replacement,
    independent of corpus order."""
    dialogs = list(corpus.dialogs) if isinstance(corpus, Corpus) else list(corpus)
    by_stratum: dict[tuple[DomainTag, int], list[Dialog]] = {}
    for dialog in dialogs:
        by_stratum.setdefault((dialog.domain, dialog.num_turns), []).append(dialog)
    selected: list[Dialog] = []
    for domain in DomainTag:
        for length in ALLOWED_TURN_LENGTHS:
            pool = sorted(by_stratum.get((domain, length), []), key=lambda d: d.id)
            if len(pool) < per_stratum:
                raise StratumError((domain.value, length), len(pool), per_stratum)
            rng = _stratum_rng(seed, "stratum", domain.value, length)
            selected.extend(rng.sample(pool, per_stratum))
    return selected


DEFAULT_EXTERNAL_COUNTS: Mapping[str, int] = {"train": 100, "valid": 20, "test": 20}


def sample_external(
    splits: Mapping[str, Sequence[Dialog]],
    counts: Mapping[str, int] | None = None,
    seed: int = 0,
) -> list[Dialog]:
    """The external-corpus protocol: seeded draw of counts[split] dialogs
    from each split (defaults 100/20/20)."""
    counts = counts or DEFAULT_EXTERNAL_COUNTS
    selected: list[Dialog] = []
    for split in counts:
        pool = sorted(splits.get(split, []), key=lambda d: d.id)
        needed = counts[split]
        if len(pool) < needed:
            raise SplitError(split, len(pool), needed)
        rng = _stratum_rng(seed, "split", split)
        selected.extend(rng.sample(pool, needed))
    return selected


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pair:
    """One blind comparison item. source_a/source_b name the input set each
    shown side came from; they exist for server-side unblinding and must
    never reach an annotator payload."""

    pair_id: str
    shown_a: Dialog
    shown_b: Dialog
    source_a: str
    source_b: str


def pair_for_comparison(
    set_a: Sequence[Dialog],
    set_b: Sequence[Dialog],
    seed: int,
    name_a: str = "set_a",
    name_b: str = "set_b",
) -> list[Pair]:
    """Index-aligned pairs with the presentation side randomized per pair."""
    if len(set_a) != len(set_b):
        raise ValueError(f"set sizes differ: {len(set_a)} vs {len(set_b)}")
    pairs: list[Pair] = []
    for i, (da, db) in enumerate(zip(set_a, set_b)):
        rng = _stratum_rng(seed, "pair", i)
        flip = rng.random() < 0.5
        if flip:
            pairs.append(Pair(f"pair-{i:04d}", db, da, name_b, name_a))
        else:
            pairs.append(Pair(f"pair-{i:04d}", da, db, name_a, name_b))
    return pairs


# ---------------------------------------------------------------------------
# Subset filtering
# ---------------------------------------------------------------------------

DEFAULT_INCAR_WHITELIST = frozenset(
    {"navigation", "weather", "hotel", "attraction", "restaurant"}
)


def normalize_service(name: str) -> str:
    """Fold dataset-specific service ids onto canonical names
    ("Hotels_2" -> "hotel")."""
    import re

    s = re.sub(r"_\d+$", "", name.strip().lower())
    if s.endswith("s") and s[:-1] in ("hotel", "restaurant", "attraction"):
        s = s[:-1]
    return s


@dataclass
class FilterResult:
    dialogs: list[Dialog]
    skipped_unlabeled: int
    excluded: int


def filter_incar_subset(
    dialogs: Sequence[Dialog],
    whitelist: Iterable[str] = DEFAULT_INCAR_WHITELIST,
    cap: int | None = None,
    seed: int = 0,
    require_all: bool = True,
) -> FilterResult:
    """Keep dialogs whose service labels are whitelisted (all labels by
    default, any with require_all=False); seeded downsample to cap when more
    qualify. Service labels are read from dialog.extra["services"];
    unlabeled dialogs are skipped and counted."""
    allowed = {normalize_service(s) for s in whitelist}
    qualifying: list[Dialog] = []
    skipped = 0
    excluded = 0
    for dialog in dialogs:
        services = dialog.extra.get("services")
        if not services:
            skipped += 1
            continue
        normalized = [normalize_service(s) for s in services]
        keep = all(s in allowed for s in normalized) if require_all else any(
            s in allowed for s in normalized
        )
        if keep:
            qualifying.append(dialog)
        else:
            excluded += 1
    if cap is not None and len(qualifying) > cap:
        rng = _stratum_rng(seed, "incar-cap")
        chosen = set(rng.sample(range(len(qualifying)), cap))
        qualifying = [d for i, d in enumerate(qualifying) if i in chosen]
    return FilterResult(dialogs=qualifying, skipped_unlabeled=skipped, excluded=excluded)


def split_fraction(
    corpus: Corpus | Sequence[Dialog], fraction: float, seed: int
) -> list[Dialog]:
    """Seeded uniform draw of round(fraction * N) dialogs without
    replacement, original order preserved."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    dialogs = list(corpus.dialogs) if isinstance(corpus, Corpus) else list(corpus)
    k = round(fraction * len(dialogs))
    rng = _stratum_rng(seed, "fraction")
    chosen = set(rng.sample(range(len(dialogs)), k))
    return [d for i, d in enumerate(dialogs) if i in chosen]
