"""Lexical diversity and overlap metrics.

Everything here is defined over pre-tokenized utterances (lists of token
strings); tokenization lives in discodrive.tokens so that diversity numbers
for fluent and injected corpora are computed over identical token streams.
Scores are returned on the percent scale except distinct_n, which is the
raw ratio in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .kernels import count_ngrams, lcs_length
from .stemmer import stem

TokenList = Sequence[str]


class UndefinedMetricError(ValueError):
    """The metric has no value on this input (e.g. zero n-grams)."""


@dataclass(frozen=True)
class MetricParams:
    max_n: int = 4
    bleu_smoothing: str = "add_k"        # "add_k" | "none"
    smoothing_k: float = 1.0
    bleu_mode: str = "corpus"            # "corpus" | "sentence"
    rouge_beta: float = 1.0
    meteor_alpha: float = 0.9
    meteor_beta: float = 3.0
    meteor_gamma: float = 0.5
    lowercase: bool = True

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.bleu_smoothing not in ("add_k", "none"):
            raise ValueError("bleu_smoothing must be add_k or none")
        if self.bleu_mode not in ("corpus", "sentence"):
            raise ValueError("bleu_mode must be corpus or sentence")
        for name in ("smoothing_k", "rouge_beta", "meteor_alpha", "meteor_beta", "meteor_gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


# ---------------------------------------------------------------------------
# distinct-n
# ---------------------------------------------------------------------------

def distinct_n(utterances: Sequence[TokenList], n: int) -> float:
    """unique n-grams / total n-gram occurrences, pooled over utterances."""
    if n < 1:
        raise ValueError("n must be >= 1")
    unique: set[tuple[str, ...]] = set()
    total = 0
    for utt in utterances:
        for i in range(len(utt) - n + 1):
            unique.add(tuple(utt[i:i + n]))
            total += 1
    if total == 0:
        raise UndefinedMetricError(f"no {n}-grams in the input")
    return len(unique) / total


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

def _bleu_counts(hyp: TokenList, ref: TokenList, max_n: int) -> tuple[list[int], list[int]]:
    clipped = [0] * (max_n + 1)
    totals = [0] * (max_n + 1)
    for n in range(1, max_n + 1):
        hc = count_ngrams(hyp, n)
        if not hc:
            continue
        rc = count_ngrams(ref, n)
        clipped[n] += sum(min(cnt, rc[g]) for g, cnt in hc.items())
        totals[n] += max(len(hyp) - n + 1, 0)
    return clipped, totals


def _bleu_from_counts(
    clipped: list[int], totals: list[int], c: int, r: int, params: MetricParams
) -> dict[int, float]:
    if c == 0:
        return {k: 0.0 for k in range(1, params.max_n + 1)}
    bp = math.exp(1.0 - r / c) if c <= r else 1.0
    scores: dict[int, float] = {}
    for k in range(1, params.max_n + 1):
        logs = []
        degenerate = False
        for n in range(1, k + 1):
            num, den = float(clipped[n]), float(totals[n])
            if params.bleu_smoothing == "add_k" and n >= 2:
                num += params.smoothing_k
                den += params.smoothing_k
            if den == 0.0 or num == 0.0:
                degenerate = True
                break
            logs.append(math.log(num / den))
        if degenerate:
            scores[k] = 0.0
        else:
            scores[k] = 100.0 * (bp * math.exp(math.fsum(logs) / k))
    return scores


def bleu(
    hypotheses: Sequence[TokenList],
    references: Sequence[TokenList],
    params: MetricParams | None = None,
) -> dict[int, float]:
    """Corpus-level modified n-gram precision BLEU for orders 1..max_n.

    Single reference per hypothesis. The brevity penalty exp(1 - r/c)
    applies only when the hypothesis corpus is not longer than the
    reference corpus (c <= r); otherwise BP = 1.
    """
    params = params or MetricParams()
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references must have equal length")
    if not hypotheses:
        raise ValueError("at least one hypothesis/reference pair is required")

    if params.bleu_mode == "sentence":
        per = [
            _bleu_from_counts(*_bleu_counts(h, ref, params.max_n), len(h), len(ref), params)
            for h, ref in zip(hypotheses, references)
        ]
        return {
            k: math.fsum(p[k] for p in per) / len(per) for k in range(1, params.max_n + 1)
        }

    clipped = [0] * (params.max_n + 1)
    totals = [0] * (params.max_n + 1)
    c = r = 0
    for h, ref in zip(hypotheses, references):
        hc, ht = _bleu_counts(h, ref, params.max_n)
        for n in range(1, params.max_n + 1):
            clipped[n] += hc[n]
            totals[n] += ht[n]
        c += len(h)
        r += len(ref)
    return _bleu_from_counts(clipped, totals, c, r, params)


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------

def rouge_l(hypothesis: TokenList, reference: TokenList, params: MetricParams | None = None) -> float:
    """LCS-based F-score (percent). Empty hypothesis or reference scores 0."""
    params = params or MetricParams()
    if not hypothesis or not reference:
        return 0.0
    lcs = lcs_length(hypothesis, reference)
    if lcs == 0:
        return 0.0
    p = lcs / len(hypothesis)
    r = lcs / len(reference)
    b2 = params.rouge_beta * params.rouge_beta
    return 100.0 * ((1.0 + b2) * p * r / (r + b2 * p))


def rouge_l_corpus(
    hypotheses: Sequence[TokenList],
    references: Sequence[TokenList],
    params: MetricParams | None = None,
) -> float:
    if len(hypotheses) != len(references) or not hypotheses:
        raise ValueError("need equal, non-empty hypothesis/reference lists")
    return math.fsum(rouge_l(h, r, params) for h, r in zip(hypotheses, references)) / len(hypotheses)


# ---------------------------------------------------------------------------
# METEOR (exact + stem matching, no synonym stage)
# ---------------------------------------------------------------------------

def _align(hypothesis: TokenList, reference: TokenList) -> list[tuple[int, int]]:
    """One-to-one unigram alignment: exact pass then stem pass, each
    matching hypothesis tokens left-to-right to the leftmost free
    reference token."""
    pairs: list[tuple[int, int]] = []
    ref_free = [True] * len(reference)
    hyp_free = [True] * len(hypothesis)

    for i, h in enumerate(hypothesis):
        for j, r in enumerate(reference):
            if ref_free[j] and r == h:
                pairs.append((i, j))
                ref_free[j] = False
                hyp_free[i] = False
                break

    hyp_stems = [stem(h) for h in hypothesis]
    ref_stems = [stem(r) for r in reference]
    for i, hs in enumerate(hyp_stems):
        if not hyp_free[i]:
            continue
        for j, rs in enumerate(ref_stems):
            if ref_free[j] and rs == hs:
                pairs.append((i, j))
                ref_free[j] = False
                break

    pairs.sort()
    return pairs


def _chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor(hypothesis: TokenList, reference: TokenList, params: MetricParams | None = None) -> float:
    """Unigram F-mean with fragmentation penalty (percent scale)."""
    params = params or MetricParams()
    if not hypothesis or not reference:
        return 0.0
    pairs = _align(hypothesis, reference)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hypothesis)
    r = m / len(reference)
    alpha = params.meteor_alpha
    f_mean = p * r / (alpha * p + (1.0 - alpha) * r)
    penalty = params.meteor_gamma * (_chunks(pairs) / m) ** params.meteor_beta
    return 100.0 * (f_mean * (1.0 - penalty))


def meteor_corpus(
    hypotheses: Sequence[TokenList],
    references: Sequence[TokenList],
    params: MetricParams | None = None,
) -> float:
    if len(hypotheses) != len(references) or not hypotheses:
        raise ValueError("need equal, non-empty hypothesis/reference lists")
    return math.fsum(meteor(h, r, params) for h, r in zip(hypotheses, references)) / len(hypotheses)
