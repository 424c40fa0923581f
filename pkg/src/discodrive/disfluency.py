"""Rule-based disfluency tagging and post-hoc injection.

The tagger applies five category rules over the shared tokenizer: filler
words, ellipsis pauses, adjacent n-gram repetitions, repair-cue corrections,
and dash false starts. The injectors implement the three post-hoc synthesis
operations (repetition, replacement-with-repair-cue, restart splice), each
returning an invertible EditTrace so injection can be verified exactly.

Overlapping rule hits are resolved by a fixed priority: repetition first,
then filler, pause, correction, false start. Repetition outranks filler so
that repeated phrases containing a filler word ("I feel like, I feel like
...") keep their repetition tag; the false-start span covers the dash token
only so it can coexist with the repair cue that usually follows it.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .corpus import Corpus, Dialog, Speaker, Turn
from .spans import DisfluencySpan, DisfluencyType, SpanSource
from .tokens import Token, tokenize


class NotApplicableError(ValueError):
    """The requested injection cannot apply to this text."""


# ---------------------------------------------------------------------------
# Lexicons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LexiconSet:
    fillers: tuple[str, ...]
    repair_cues: tuple[str, ...]
    synonyms: dict[str, tuple[str, ...]] = field(default_factory=dict)
    antonyms: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for entry in (*self.fillers, *self.repair_cues, *self.synonyms, *self.antonyms):
            if entry != entry.lower():
                raise ValueError(f"lexicon entry {entry!r} must be lowercase")

    @property
    def replacement_keys(self) -> set[str]:
        return set(self.synonyms) | set(self.antonyms)

    def substitutes(self, word: str) -> tuple[str, ...]:
        return tuple(self.synonyms.get(word, ())) + tuple(self.antonyms.get(word, ()))


def _load_json(name: str) -> dict:
    text = resources.files("discodrive").joinpath(f"data/lexicons/{name}").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def default_lexicons() -> LexiconSet:
    """Lexicons shipped as editable JSON under data/lexicons/."""
    syn = {k.lower(): tuple(v) for k, v in _load_json("synonyms.json").items()}
    ant = {k.lower(): tuple(v) for k, v in _load_json("antonyms.json").items()}
    return LexiconSet(
        fillers=tuple(w.lower() for w in _load_json("fillers.json")["fillers"]),
        repair_cues=tuple(c.lower() for c in _load_json("cues.json")["repair_cues"]),
        synonyms=syn,
        antonyms=ant,
    )


def load_lexicons(fillers_path=None, cues_path=None, synonyms_path=None, antonyms_path=None) -> LexiconSet:
    """Build a LexiconSet from user-supplied JSON files, falling back to the
    packaged defaults for any path left as None."""
    base = default_lexicons()

    def read(path):
        return json.loads(open(path, encoding="utf-8").read())

    return LexiconSet(
        fillers=tuple(w.lower() for w in read(fillers_path)["fillers"]) if fillers_path else base.fillers,
        repair_cues=tuple(c.lower() for c in read(cues_path)["repair_cues"]) if cues_path else base.repair_cues,
        synonyms={k.lower(): tuple(v) for k, v in read(synonyms_path).items()} if synonyms_path else base.synonyms,
        antonyms={k.lower(): tuple(v) for k, v in read(antonyms_path).items()} if antonyms_path else base.antonyms,
    )


# ---------------------------------------------------------------------------
# Tagger
# ---------------------------------------------------------------------------

_DASHES = {"—", "–", "--"}
_RESTART_MARKERS = ("actually", "wait", "let's")


def _is_ellipsis(tok: Token) -> bool:
    return tok.text == "…" or (len(tok.text) >= 3 and set(tok.text) == {"."})


def _phrase_words(phrase: str) -> tuple[str, ...]:
    return tuple(t.norm for t in tokenize(phrase) if t.is_word)


def _match_phrase(norms: Sequence[str], at: int, phrase: tuple[str, ...]) -> bool:
    k = len(phrase)
    return at + k <= len(norms) and tuple(norms[at:at + k]) == phrase


def _span_between(tokens: list[Token], start_char: int, before_char: int) -> int:
    """End offset of the last token that starts inside [start_char, before_char)."""
    end = start_char
    for tok in tokens:
        if tok.start >= before_char:
            break
        if tok.start >= start_char:
            end = tok.end
    return end


def tag_disfluencies(text: str, lexicons: LexiconSet | None = None) -> list[DisfluencySpan]:
    """Tag disfluency spans in one utterance; pure, rule-based, heuristic."""
    lex = lexicons or default_lexicons()
    toks = tokenize(text)
    words = [t for t in toks if t.is_word]
    norms = [t.norm for t in words]

    candidates: list[tuple[int, DisfluencySpan]] = []

    # repetition: adjacent duplicated word n-gram, longest first
    used: set[int] = set()
    for n in (4, 3, 2, 1):
        for i in range(len(words) - 2 * n + 1):
            span_idx = range(i, i + 2 * n)
            if any(j in used for j in span_idx):
                continue
            if norms[i:i + n] == norms[i + n:i + 2 * n]:
                end = _span_between(toks, words[i].start, words[i + n].start)
                candidates.append((0, DisfluencySpan(words[i].start, end, DisfluencyType.REPETITION)))
                used.update(span_idx)

    # filler: lexicon token (or phrase), longest first at each position
    filler_phrases = sorted((_phrase_words(f) for f in lex.fillers), key=len, reverse=True)
    taken: set[int] = set()
    for i in range(len(words)):
        if i in taken:
            continue
        for phrase in filler_phrases:
            if phrase and _match_phrase(norms, i, phrase):
                k = len(phrase)
                candidates.append(
                    (1, DisfluencySpan(words[i].start, words[i + k - 1].end, DisfluencyType.FILLER))
                )
                taken.update(range(i, i + k))
                break

    # pause: ellipsis tokens
    for tok in toks:
        if _is_ellipsis(tok):
            candidates.append((2, DisfluencySpan(tok.start, tok.end, DisfluencyType.PAUSE)))

    # correction: repair-cue phrase, longest first at each position
    cue_phrases = sorted((_phrase_words(c) for c in lex.repair_cues), key=len, reverse=True)
    taken = set()
    for i in range(len(words)):
        if i in taken:
            continue
        for phrase in cue_phrases:
            if phrase and _match_phrase(norms, i, phrase):
                k = len(phrase)
                candidates.append(
                    (3, DisfluencySpan(words[i].start, words[i + k - 1].end, DisfluencyType.CORRECTION))
                )
                taken.update(range(i, i + k))
                break

    # false start: dash followed within 3 word tokens by a restart marker
    markers = [_phrase_words(m) for m in _RESTART_MARKERS] + cue_phrases
    word_pos_after = lambda char: next((i for i, w in enumerate(words) if w.start >= char), len(words))
    for tok in toks:
        if tok.text in _DASHES:
            first = word_pos_after(tok.end)
            if any(
                _match_phrase(norms, j, m)
                for j in range(first, min(first + 3, len(words)))
                for m in markers
            ):
                candidates.append((4, DisfluencySpan(tok.start, tok.end, DisfluencyType.FALSE_START)))

    # overlap resolution by rule priority, then position
    accepted: list[DisfluencySpan] = []
    for _, span in sorted(candidates, key=lambda c: (c[0], c[1].start)):
        if all(span.end <= s.start or span.start >= s.end for s in accepted):
            accepted.append(span)
    return sorted(accepted)


# ---------------------------------------------------------------------------
# Edit traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Edit:
    kind: DisfluencyType
    position: int                       # word index in the original text
    inserted_tokens: tuple[str, ...]
    removed_tokens: tuple[str, ...]
    char_pos: int                       # char offset in the original text
    inserted_text: str
    removed_text: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "position": self.position,
            "inserted_tokens": list(self.inserted_tokens),
            "removed_tokens": list(self.removed_tokens),
            "char_pos": self.char_pos,
            "inserted_text": self.inserted_text,
            "removed_text": self.removed_text,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Edit":
        return cls(
            kind=DisfluencyType(obj["kind"]),
            position=int(obj["position"]),
            inserted_tokens=tuple(obj["inserted_tokens"]),
            removed_tokens=tuple(obj["removed_tokens"]),
            char_pos=int(obj["char_pos"]),
            inserted_text=obj["inserted_text"],
            removed_text=obj["removed_text"],
        )


@dataclass(frozen=True)
class EditTrace:
    """Invertible record of how a disfluent string was derived.

    Edit offsets refer to the original text; edits are kept sorted by
    char_pos so application and inversion are well-defined.
    """

    original_text: str
    edits: tuple[Edit, ...]

    def apply(self) -> str:
        out = self.original_text
        for edit, delta in zip(self.edits, self._deltas()):
            pos = edit.char_pos + delta
            out = out[:pos] + edit.inserted_text + out[pos + len(edit.removed_text):]
        return out

    def invert(self, disfluent_text: str) -> str:
        out = disfluent_text
        deltas = self._deltas()
        for edit, delta in reversed(list(zip(self.edits, deltas))):
            pos = edit.char_pos + delta
            if out[pos:pos + len(edit.inserted_text)] != edit.inserted_text:
                raise ValueError("trace does not match the disfluent text")
            out = out[:pos] + edit.removed_text + out[pos + len(edit.inserted_text):]
        return out

    def _deltas(self) -> list[int]:
        deltas, acc = [], 0
        for edit in self.edits:
            deltas.append(acc)
            acc += len(edit.inserted_text) - len(edit.removed_text)
        return deltas

    def injected_spans(self) -> list[DisfluencySpan]:
        """Spans of the inserted material, in disfluent-text coordinates."""
        spans = []
        for edit, delta in zip(self.edits, self._deltas()):
            pos = edit.char_pos + delta
            lead = len(edit.inserted_text) - len(edit.inserted_text.lstrip())
            start = pos + lead
            end = pos + len(edit.inserted_text.rstrip())
            if end > start:
                spans.append(DisfluencySpan(start, end, edit.kind, SpanSource.INJECTED))
        return spans

    def to_json(self) -> dict:
        return {"original_text": self.original_text, "edits": [e.to_json() for e in self.edits]}

    @classmethod
    def from_json(cls, obj: dict) -> "EditTrace":
        return cls(
            original_text=obj["original_text"],
            edits=tuple(Edit.from_json(e) for e in obj["edits"]),
        )


# ---------------------------------------------------------------------------
# Injectors
# ---------------------------------------------------------------------------

def inject_repetition(text: str, rng: random.Random) -> tuple[str, EditTrace]:
    """Duplicate a random 1- or 2-token span in place."""
    words = [t for t in tokenize(text) if t.is_word]
    if not words:
        raise ValueError("text has no tokens to repeat")
    length = rng.choice((1, 2)) if len(words) >= 2 else 1
    i = rng.randrange(len(words) - length + 1)
    seg_start, seg_end = words[i].start, words[i + length - 1].end
    segment = text[seg_start:seg_end]
    edit = Edit(
        kind=DisfluencyType.REPETITION,
        position=i + length,
        inserted_tokens=tuple(w.text for w in words[i:i + length]),
        removed_tokens=(),
        char_pos=seg_end,
        inserted_text=" " + segment,
        removed_text="",
    )
    trace = EditTrace(original_text=text, edits=(edit,))
    return trace.apply(), trace


def inject_replacement(
    text: str,
    lexicons: LexiconSet,
    rng: random.Random,
    cue_probability: float = 0.8,
    cue_before_substitute: bool = False,
) -> tuple[str, EditTrace]:
    """Insert a substitute phrase plus repair cue, then retrace the original
    token: "... t [substitute] [cue] t ..."."""
    words = [t for t in tokenize(text) if t.is_word]
    keys = lexicons.replacement_keys
    covered = [(i, t) for i, t in enumerate(words) if t.norm in keys]
    if not covered:
        raise NotApplicableError("no token is covered by the synonym/antonym lexicons")
    i, tok = covered[rng.randrange(len(covered))]
    substitute = rng.choice(lexicons.substitutes(tok.norm))
    cue = rng.choice(lexicons.repair_cues) if rng.random() < cue_probability else None
    if cue is None:
        block = substitute
    elif cue_before_substitute:
        block = f"{cue} {substitute}"
    else:
        block = f"{substitute} {cue}"
    edit = Edit(
        kind=DisfluencyType.REPLACEMENT,
        position=i + 1,
        inserted_tokens=tuple(block.split()) + (tok.text,),
        removed_tokens=(),
        char_pos=tok.end,
        inserted_text=f" {block} {tok.text}",
        removed_text="",
    )
    trace = EditTrace(original_text=text, edits=(edit,))
    return trace.apply(), trace


def inject_restart(seq1: str, seq2: str, rng: random.Random) -> tuple[str, EditTrace]:
    """Truncate seq1 at a random interior token boundary and splice in the
    whole of seq2."""
    if not seq1.strip() or not seq2.strip():
        raise ValueError("both sequences must be non-empty")
    words = [t for t in tokenize(seq1) if t.is_word]
    if len(words) < 2:
        raise ValueError("first sequence needs at least two tokens to split")
    j = rng.randrange(1, len(words))
    cut = words[j - 1].end
    edit = Edit(
        kind=DisfluencyType.RESTART,
        position=j,
        inserted_tokens=tuple(t.text for t in tokenize(seq2) if t.is_word),
        removed_tokens=tuple(t.text for t in words[j:]),
        char_pos=cut,
        inserted_text=" " + seq2,
        removed_text=seq1[cut:],
    )
    trace = EditTrace(original_text=seq1, edits=(edit,))
    return trace.apply(), trace


# ---------------------------------------------------------------------------
# Corpus-level injection
# ---------------------------------------------------------------------------

_INJECT_OPS = (DisfluencyType.REPETITION, DisfluencyType.REPLACEMENT, DisfluencyType.RESTART)


@dataclass(frozen=True)
class InjectionPlan:
    rate: float = 1.0
    op_weights: dict = field(default_factory=lambda: {DisfluencyType.REPETITION: 1.0})

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")
        for op in self.op_weights:
            if op not in _INJECT_OPS:
                raise ValueError(f"{op} is not an injection op")
        if self.op_weights and sum(self.op_weights.values()) <= 0:
            raise ValueError("op weights must sum to a positive value")


def _derive_rng(seed: int, index: int) -> random.Random:
    digest = hashlib.sha256(f"inject\x1f{index}".encode()).digest()
    return random.Random(seed ^ int.from_bytes(digest[:8], "big"))


def _pick_op(plan: InjectionPlan, rng: random.Random) -> DisfluencyType:
    ops = [op for op in _INJECT_OPS if plan.op_weights.get(op, 0.0) > 0]
    weights = [plan.op_weights[op] for op in ops]
    roll = rng.random() * sum(weights)
    acc = 0.0
    for op, w in zip(ops, weights):
        acc += w
        if roll < acc:
            return op
    return ops[-1]


def inject_corpus(
    corpus: Corpus,
    plan: InjectionPlan,
    lexicons: LexiconSet | None = None,
    seed: int = 0,
) -> Corpus:
    """Apply post-hoc injection to driver turns only. Car-AI turns are never
    touched. Inapplicable ops are skipped and counted; every applied edit is
    recorded under provenance["edit_traces"] together with the turn's
    original spans so the operation is fully invertible."""
    lex = lexicons or default_lexicons()
    traces: dict[str, dict[str, dict]] = {}
    skipped = 0
    modified = 0
    new_dialogs: list[Dialog] = []

    for d_idx, dialog in enumerate(corpus.dialogs):
        rng = _derive_rng(seed, d_idx)
        driver_texts = [t.text for t in dialog.turns if t.speaker == Speaker.DRIVER]
        new_turns: list[Turn] = []
        for turn in dialog.turns:
            if turn.speaker != Speaker.DRIVER or rng.random() >= plan.rate or not plan.op_weights:
                new_turns.append(turn)
                continue
            op = _pick_op(plan, rng)
            try:
                if op == DisfluencyType.REPETITION:
                    new_text, trace = inject_repetition(turn.text, rng)
                elif op == DisfluencyType.REPLACEMENT:
                    new_text, trace = inject_replacement(turn.text, lex, rng)
                else:
                    others = [t for t in driver_texts if t != turn.text]
                    if not others:
                        raise NotApplicableError("restart needs another driver utterance")
                    new_text, trace = inject_restart(turn.text, rng.choice(others), rng)
            except (NotApplicableError, ValueError):
                skipped += 1
                new_turns.append(turn)
                continue
            traces.setdefault(dialog.id, {})[str(turn.turn_index)] = {
                "trace": trace.to_json(),
                "original_spans": [s.to_json() for s in turn.disfluency_spans],
            }
            modified += 1
            new_turns.append(
                replace(turn, text=new_text, disfluency_spans=tuple(trace.injected_spans()))
            )
        new_dialogs.append(replace(dialog, turns=tuple(new_turns)))

    provenance = dict(corpus.provenance)
    provenance["edit_traces"] = traces
    provenance["injection"] = {
        "seed": seed,
        "rate": plan.rate,
        "op_weights": {op.value: w for op, w in plan.op_weights.items()},
        "modified_turns": modified,
        "skipped_ops": skipped,
    }
    return Corpus(dialogs=tuple(new_dialogs), provenance=provenance)


def invert_corpus(corpus: Corpus) -> Corpus:
    """Undo inject_corpus via the provenance traces (test/debug facility)."""
    traces = corpus.provenance.get("edit_traces", {})
    restored: list[Dialog] = []
    for dialog in corpus.dialogs:
        per_dialog = traces.get(dialog.id, {})
        new_turns = []
        for turn in dialog.turns:
            rec = per_dialog.get(str(turn.turn_index))
            if rec is None:
                new_turns.append(turn)
                continue
            trace = EditTrace.from_json(rec["trace"])
            new_turns.append(
                replace(
                    turn,
                    text=trace.invert(turn.text),
                    disfluency_spans=tuple(
                        DisfluencySpan.from_json(s) for s in rec["original_spans"]
                    ),
                )
            )
        restored.append(replace(dialog, turns=tuple(new_turns)))
    provenance = {
        k: v for k, v in corpus.provenance.items() if k not in ("edit_traces", "injection")
    }
    return Corpus(dialogs=tuple(restored), provenance=provenance)
