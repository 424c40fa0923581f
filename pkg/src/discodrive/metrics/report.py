"""Corpus-level scoring of model generations and table rendering.

Input is a JSONL file of {context, reference, hypothesis} records; the
report carries every overlap metric in the conventional column order
(BLEU-1..4, ROUGE-L, METEOR), optionally with a placeholder column for
embedding-based scores this package deliberately does not compute.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import Corpus
from ..tokens import metric_tokens
from .scores import MetricParams, bleu, distinct_n, meteor_corpus, rouge_l_corpus


class ScoreFileError(ValueError):
    def __init__(self, message: str, record: int | None = None):
        super().__init__(message if record is None else f"record {record}: {message}")
        self.record = record


@dataclass(frozen=True)
class MetricReport:
    scores: dict[str, float]
    sentences: int
    tokens: int
    params: MetricParams = field(default_factory=MetricParams)

    def __post_init__(self) -> None:
        for name, value in self.scores.items():
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"score {name}={value} outside [0, 100]")

    def to_json(self) -> dict:
        return {"scores": dict(self.scores), "sentences": self.sentences, "tokens": self.tokens}


_COLUMNS = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L", "METEOR"]
_KEYS = ["bleu_1", "bleu_2", "bleu_3", "bleu_4", "rouge_l", "meteor"]


def read_score_file(path: str | Path) -> list[dict]:
    rows: list[dict] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for idx, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScoreFileError(str(exc), record=idx) from exc
            for key in ("context", "reference", "hypothesis"):
                if key not in obj:
                    raise ScoreFileError(f"missing field {key!r}", record=idx)
            rows.append(obj)
    return rows


def corpus_report(path: str | Path, params: MetricParams | None = None) -> MetricReport:
    params = params or MetricParams()
    rows = read_score_file(path)
    if not rows:
        raise ValueError(f"{path}: no records to score")
    hyps = [metric_tokens(r["hypothesis"], lowercase=params.lowercase) for r in rows]
    refs = [metric_tokens(r["reference"], lowercase=params.lowercase) for r in rows]
    bleu_scores = bleu(hyps, refs, params)
    scores = {f"bleu_{k}": v for k, v in bleu_scores.items()}
    scores["rouge_l"] = rouge_l_corpus(hyps, refs, params)
    scores["meteor"] = meteor_corpus(hyps, refs, params)
    return MetricReport(
        scores=scores,
        sentences=len(rows),
        tokens=sum(len(h) for h in hyps),
        params=params,
    )


def render_report_table(report: MetricReport, include_bertscore_column: bool = False) -> str:
    """Aligned text table in the conventional column order. The BERTScore
    column renders an em dash: it needs neural embeddings and is out of
    scope here."""
    cols = list(_COLUMNS)
    keys = list(_KEYS)
    max_n = report.params.max_n
    cols = [c for c in cols if not c.startswith("BLEU-") or int(c.split("-")[1]) <= max_n]
    keys = [k for k in keys if not k.startswith("bleu_") or int(k.split("_")[1]) <= max_n]
    if include_bertscore_column:
        cols.append("BERTScore F1")
    cells = [f"{report.scores[k]:.2f}" for k in keys]
    if include_bertscore_column:
        cells.append("—")
    widths = [max(len(c), len(v)) for c, v in zip(cols, cells)]
    header = "  ".join(c.rjust(w) for c, w in zip(cols, widths))
    values = "  ".join(v.rjust(w) for v, w in zip(cells, widths))
    return header + "\n" + values


def corpus_distinct(corpus: Corpus, max_n: int = 4, lowercase: bool = True,
                    speaker: str | None = None) -> dict[int, float]:
    """Distinct-1..max_n over all turn texts (optionally one speaker)."""
    utterances = [
        metric_tokens(turn.text, lowercase=lowercase)
        for dialog in corpus.dialogs
        for turn in dialog.turns
        if speaker is None or turn.speaker.value == speaker
    ]
    return {n: distinct_n(utterances, n) for n in range(1, max_n + 1)}


def render_distinct_table(values: dict[int, float], label: str = "Corpus") -> str:
    """Two-column table matching the lexical-diversity table layout."""
    rows = [("N-Gram", label)]
    rows += [(f"{n}-gram", f"{v:.4f}") for n, v in sorted(values.items())]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    return "\n".join(f"{a.ljust(w0)}  {b.rjust(w1)}" for a, b in rows)
