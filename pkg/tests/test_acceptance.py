"""Acceptance suite: one test per release criterion, each at its stated
tolerance and runtime budget. The terminal summary (conftest) prints one
pass/fail line per criterion.
"""

from __future__ import annotations

import json
import random
import re
import time

import pytest

import oracles
from conftest import build_dialog
from discodrive.backend import BackendConfig, BackendKind, build_backend
from discodrive.corpus import (
    ALLOWED_TURN_LENGTHS,
    Corpus,
    DomainTag,
    Scenario,
    Speaker,
    read_corpus,
    validate_dialog,
    write_corpus,
)
from discodrive.disfluency import (
    LexiconSet,
    default_lexicons,
    inject_repetition,
    inject_replacement,
    inject_restart,
    tag_disfluencies,
)
from discodrive.evalharness import (
    INTRINSIC_METRICS,
    RatingRecord,
    SplitError,
    StratumError,
    aggregate_likert,
    aggregate_pairwise,
    filter_incar_subset,
    sample_discodrive,
    sample_external,
    split_fraction,
)
from discodrive.metrics import MetricParams, bleu, distinct_n, meteor, rouge_l
from discodrive.service import AnnotationStore, DuplicateRatingError, intrinsic_items
from discodrive.simulate import GenerationConfig, default_templates, generate_corpus
from discodrive.spans import DisfluencyType

MOCK = BackendConfig(kind=BackendKind.MOCK)


# ---------------------------------------------------------------------------
# Criterion: metric oracle equivalence (20-case hand suite, 1e-9, < 5 s)
# ---------------------------------------------------------------------------

HAND_SUITE = [
    ("the cat sat", "the cat sat"),
    ("turn left at the next signal please", "turn left at the next signal please"),
    ("alpha beta gamma", "delta epsilon zeta"),
    ("the cat", "the cat sat on the mat"),
    ("the cat sat on the mat today", "the cat sat"),
    ("the the the", "the cat"),
    ("the cat", "cat the"),
    ("running quickly home", "run quick home"),
    ("turn left at the light", "turn right at the light"),
    ("stop", "stop"),
    ("go", "halt"),
    ("a b c d e f g h i j", "a b"),
    ("check the oil , please .", "check the oil level , please ."),
    ("the cat the cat sat", "the cat sat"),
    ("cat cat cat dog", "cat dog bird"),
    ("stations near me", "station near us"),
    ("finding charging stations ahead", "find a charging station ahead"),
    ("a x b y c z", "a b c"),
    ("same same same same", "same same"),
    ("please reroute around the accident on the highway ahead",
     "reroute me around the highway accident ahead please"),
]

CORPUS_CASES = [
    HAND_SUITE[:3],
    HAND_SUITE[3:8],
    HAND_SUITE[8:14],
    HAND_SUITE[14:20],
    HAND_SUITE,
]


def test_metric_oracle_equivalence():
    started = time.monotonic()
    params = MetricParams()
    for hyp_s, ref_s in HAND_SUITE:
        hyp, ref = hyp_s.split(), ref_s.split()
        assert rouge_l(hyp, ref, params) / 100.0 == pytest.approx(
            oracles.oracle_rouge_l(hyp, ref), abs=1e-9
        )
        assert meteor(hyp, ref, params) / 100.0 == pytest.approx(
            oracles.oracle_meteor(hyp, ref), abs=1e-9
        )
        got = bleu([hyp], [ref], params)
        want = oracles.oracle_bleu([hyp], [ref])
        for k in range(1, 5):
            assert got[k] / 100.0 == pytest.approx(want[k], abs=1e-9)
        utts = [hyp, ref]
        for n in (1, 2):
            if any(len(u) >= n for u in utts):
                assert distinct_n(utts, n) == pytest.approx(
                    oracles.oracle_distinct_n(utts, n), abs=1e-9
                )
    for case in CORPUS_CASES:
        hyps = [h.split() for h, _ in case]
        refs = [r.split() for _, r in case]
        got = bleu(hyps, refs, params)
        want = oracles.oracle_bleu(hyps, refs)
        for k in range(1, 5):
            assert got[k] / 100.0 == pytest.approx(want[k], abs=1e-9)
    assert time.monotonic() - started < 5.0


# ---------------------------------------------------------------------------
# Criterion: trivial metric anchors (exact equalities)
# ---------------------------------------------------------------------------

def test_trivial_metric_anchors():
    params = MetricParams()
    sentence = "check the tire pressure before the long drive north today".split()
    for n in range(1, 11):
        h = sentence[:n]
        scores = bleu([h], [h], params)
        assert all(scores[k] == 100.0 for k in range(1, 5))
        assert rouge_l(h, h, params) == 100.0
        expected = 100.0 * (1.0 - params.meteor_gamma * (1.0 / n) ** params.meteor_beta)
        assert meteor(h, h, params) == expected


# ---------------------------------------------------------------------------
# Criterion: distinct-n brute force (50 random corpora, exact, < 5 s)
# ---------------------------------------------------------------------------

def test_distinct_brute_force():
    started = time.monotonic()
    rng = random.Random(2024)
    vocab = "a b c d e f g h".split()
    checked = 0
    for _ in range(50):
        utts = [
            [rng.choice(vocab) for _ in range(rng.randrange(1, 13))]
            for _ in range(rng.randrange(1, 11))
        ]
        for n in (1, 2, 3):
            if all(len(u) < n for u in utts):
                continue
            assert distinct_n(utts, n) == oracles.oracle_distinct_n(utts, n)
            checked += 1
    assert checked >= 100
    assert time.monotonic() - started < 5.0


# ---------------------------------------------------------------------------
# Criterion: injector roundtrip (1000 seeded trials per op, exact, < 10 s)
# ---------------------------------------------------------------------------

def test_injector_roundtrip():
    started = time.monotonic()
    lex = default_lexicons()
    vocab = (
        "check the tire pressure turn left right near exit stop fast slow route find "
        "closest station open light heavy traffic far now please again soon"
    ).split()
    rng = random.Random(7)

    def sentence(min_words=1):
        return " ".join(rng.choice(vocab) for _ in range(rng.randrange(min_words, 14)))

    for trial in range(1000):
        text = sentence()
        out, trace = inject_repetition(text, random.Random(trial))
        assert trace.invert(out) == text

    done = 0
    while done < 1000:
        text = sentence()
        try:
            out, trace = inject_replacement(text, lex, random.Random(done))
        except Exception:
            continue
        assert trace.invert(out) == text
        done += 1

    for trial in range(1000):
        seq1 = sentence(min_words=2)
        seq2 = sentence()
        out, trace = inject_restart(seq1, seq2, random.Random(trial))
        assert trace.invert(out) == seq1

    assert time.monotonic() - started < 10.0


# ---------------------------------------------------------------------------
# Criterion: post-hoc injection fixtures reproduced verbatim
# ---------------------------------------------------------------------------

class _Pinned:
    def __init__(self, choices=(), randranges=(), randoms=()):
        self.choices = list(choices)
        self.randranges = list(randranges)
        self.randoms = list(randoms)

    def choice(self, seq):
        value = self.choices.pop(0)
        assert value in list(seq)
        return value

    def randrange(self, *args):
        return self.randranges.pop(0)

    def random(self):
        return self.randoms.pop(0)


def test_posthoc_injection_fixtures():
    out, _ = inject_repetition(
        "will it be raining in the next 7 days.", _Pinned(choices=[2], randranges=[7])
    )
    assert out == "will it be raining in the next 7 days 7 days."

    lex = LexiconSet(
        fillers=("um",),
        repair_cues=("no sorry",),
        synonyms={"where": ("the nearest restaurant",)},
    )
    out, _ = inject_replacement(
        "show me the closest location where i can get chinese food.",
        lex,
        _Pinned(choices=["the nearest restaurant", "no sorry"], randranges=[0], randoms=[0.0]),
    )
    assert out == (
        "show me the closest location where the nearest restaurant no sorry "
        "where i can get chinese food."
    )

    out, _ = inject_restart(
        "Set a reminder that I have a lab appointment with my aunt next Wednesday at 1pm.",
        "Check to see if it will be windy in brentwood the next few days.",
        _Pinned(randranges=[5]),
    )
    assert out == (
        "Set a reminder that I Check to see if it will be windy in brentwood "
        "the next few days."
    )


# ---------------------------------------------------------------------------
# Criterion: tagger soundness (ten category fixtures + fluent control set)
# ---------------------------------------------------------------------------

TAGGED_FIXTURES = [
    ("I think, I think we should take the next exit.", DisfluencyType.REPETITION),
    ("We could—actually, let’s try the other route.", DisfluencyType.FALSE_START),
    ("Can you, um, check the tire pressure?", DisfluencyType.FILLER),
    ("I think we’ll be there... um, soon.", DisfluencyType.PAUSE),
    ("Turn left—no, wait, I mean right.", DisfluencyType.CORRECTION),
    ("I feel like, I feel like we’re going in the wrong direction.", DisfluencyType.REPETITION),
    ("I was planning to—actually, wait, do we need gas first?", DisfluencyType.FALSE_START),
    ("So, we’re going to... um, the restaurant?", DisfluencyType.PAUSE),
    ("I’ll pick you up at 6—oh, no, sorry, 6:30.", DisfluencyType.CORRECTION),
    ("Can you, um, tell me how far we are from the destination?", DisfluencyType.FILLER),
]

FLUENT_CONTROL = [
    "Turn left at the signal.",
    "Please check the tire pressure before we leave.",
    "The fastest route avoids the highway during rush hour.",
    "Schedule an oil change for next Tuesday morning.",
    "There is a charging station two miles ahead.",
    "Play the next track on this album.",
    "What is the weather forecast for tomorrow afternoon?",
    "Set the cabin temperature to twenty degrees.",
    "The museum closes at six in the evening.",
    "Take the second exit at the roundabout.",
    "Traffic is heavy near the stadium tonight.",
    "Remind me to call the garage after lunch.",
    "The rear defroster is now active.",
    "Fuel level is below one quarter of the tank.",
    "Navigation will resume after this turn.",
    "Your appointment is confirmed for Friday at nine.",
    "The parking garage accepts card payments only.",
    "Headlights switch to automatic mode at dusk.",
    "A rest area appears in forty kilometers.",
    "The audiobook resumes from chapter eleven.",
]


def test_tagger_soundness():
    assert len(TAGGED_FIXTURES) == 10
    for text, expected_kind in TAGGED_FIXTURES:
        kinds = {span.kind for span in tag_disfluencies(text)}
        assert expected_kind in kinds, f"{text!r} missing {expected_kind}"
    assert len(FLUENT_CONTROL) == 20
    for text in FLUENT_CONTROL:
        assert tag_disfluencies(text) == [], f"false positive on {text!r}"


# ---------------------------------------------------------------------------
# Criterion: pipeline validity (500 mock dialogs, < 60 s)
# ---------------------------------------------------------------------------

class _Recorder:
    def __init__(self, delegate):
        self.delegate = delegate
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.delegate.complete(request)


def _pipeline_scenarios(total=500):
    domains = list(DomainTag)
    counts = [total // 7 + (1 if i < total % 7 else 0) for i in range(7)]
    scenarios = []
    for domain, count in zip(domains, counts):
        for i in range(count):
            scenarios.append(
                Scenario(
                    id=f"{domain.value}-{i:04d}",
                    domain=domain,
                    text=f"The driver wants scripted scenario {i} for {domain.value}.",
                )
            )
    return scenarios


def test_pipeline_validity(tmp_path):
    started = time.monotonic()
    scenarios = _pipeline_scenarios(500)
    config = GenerationConfig(backend=MOCK, seed=2024, history_window=6)
    recorder = _Recorder(build_backend(MOCK))
    result = generate_corpus(config, scenarios, backend=recorder)
    corpus = result.corpus

    # 500 dialogs, all strict-valid, all domains and lengths covered
    assert result.failures == []
    assert len(corpus) == 500
    strata = set()
    for dialog in corpus.dialogs:
        assert validate_dialog(dialog, strict_lengths=True).ok
        strata.add((dialog.domain, dialog.num_turns))
    assert strata == {(d, n) for d in DomainTag for n in ALLOWED_TURN_LENGTHS}

    # instrumented backend: history window never exceeded, concluding stages
    # exactly at turns num_turns-2 and num_turns-1
    templates = default_templates()
    lengths = [d.num_turns for d in corpus.dialogs]
    assert len(recorder.requests) == sum(lengths)
    cursor = 0
    for num_turns in lengths:
        for turn_index in range(num_turns):
            request = recorder.requests[cursor]
            cursor += 1
            system = request.messages[0].content
            history_lines = [
                line
                for line in request.messages[1].content.splitlines()
                if line.startswith(("Driver: ", "Car AI: "))
            ]
            assert len(history_lines) <= 6
            assert len(history_lines) == min(turn_index, 6)
            if turn_index == num_turns - 2:
                assert system == templates.driver_concluding
            elif turn_index == num_turns - 1:
                assert system == templates.ai_concluding
            elif turn_index % 2 == 0:
                assert system == templates.driver_regular
            else:
                assert system == templates.ai_regular

    # fixed seed => byte-identical corpus across two runs
    second = generate_corpus(config, scenarios)
    path_a, path_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_corpus(corpus, path_a)
    write_corpus(second.corpus, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()

    assert time.monotonic() - started < 60.0


# ---------------------------------------------------------------------------
# Criterion: sampling protocol
# ---------------------------------------------------------------------------

def _stocked_corpus(per_stratum=5):
    dialogs = []
    for domain in DomainTag:
        for length in ALLOWED_TURN_LENGTHS:
            for i in range(per_stratum):
                dialogs.append(
                    build_dialog(f"{domain.value}-{length}-{i}", domain=domain, num_turns=length)
                )
    return Corpus(tuple(dialogs))


def test_sampling_protocol():
    sample = sample_discodrive(_stocked_corpus(), seed=17)
    assert len(sample) == 140
    per_domain: dict = {}
    per_stratum: dict = {}
    for dialog in sample:
        per_domain[dialog.domain] = per_domain.get(dialog.domain, 0) + 1
        key = (dialog.domain, dialog.num_turns)
        per_stratum[key] = per_stratum.get(key, 0) + 1
    assert all(v == 20 for v in per_domain.values()) and len(per_domain) == 7
    assert all(v == 4 for v in per_stratum.values()) and len(per_stratum) == 35

    splits = {
        "train": [build_dialog(f"tr{i}") for i in range(120)],
        "valid": [build_dialog(f"va{i}") for i in range(25)],
        "test": [build_dialog(f"te{i}") for i in range(25)],
    }
    sample2 = sample_external(splits, seed=5)
    counts = {
        "train": sum(d.id.startswith("tr") for d in sample2),
        "valid": sum(d.id.startswith("va") for d in sample2),
        "test": sum(d.id.startswith("te") for d in sample2),
    }
    assert counts == {"train": 100, "valid": 20, "test": 20}

    thinned = [
        d for d in _stocked_corpus(4).dialogs
        if not (d.domain == DomainTag.WEATHER and d.num_turns == 10 and d.id.endswith("-0"))
    ]
    with pytest.raises(StratumError) as stratum_err:
        sample_discodrive(Corpus(tuple(thinned)), seed=1)
    assert stratum_err.value.stratum == ("weather", 10)

    with pytest.raises(SplitError) as split_err:
        sample_external({"train": splits["train"], "valid": splits["valid"], "test": []}, seed=1)
    assert split_err.value.split == "test"


# ---------------------------------------------------------------------------
# Criterion: aggregation (5 hand fixtures, 1e-9; Table-style rendering; sums)
# ---------------------------------------------------------------------------

LIKERT_FIXTURES = [
    [3, 4, 4, 5],
    [4, 4, 4, 4],
    [1, 5],
    [2, 3, 3, 4, 5, 5, 1, 4],
    [5, 5, 5, 5, 4],
]


def test_aggregation():
    for values in LIKERT_FIXTURES:
        records = [
            RatingRecord(evaluator_id="e1", item_id=f"d{i}", metric_name="naturalness", value=v)
            for i, v in enumerate(values)
        ]
        summary = aggregate_likert(records)["naturalness"]
        mean, half = oracles.oracle_likert(values, z=1.96)
        assert summary.mean == pytest.approx(mean, abs=1e-9)
        assert summary.half_width == pytest.approx(half, abs=1e-9)
        assert re.fullmatch(r"\d+\.\d \(±\d+\.\d{2}\)", summary.render())
    records = [
        RatingRecord(evaluator_id="e1", item_id=f"d{i}", metric_name="naturalness", value=v)
        for i, v in enumerate([3, 4, 4, 5])
    ]
    assert aggregate_likert(records)["naturalness"].render() == "4.0 (±0.80)"

    rng = random.Random(3)
    pairwise = [
        RatingRecord(
            evaluator_id=f"e{i % 2}",
            item_id=f"p{i}",
            metric_name=metric,
            choice=rng.choice("AB"),
        )
        for metric in ("overall", "naturalness", "engagement")
        for i in range(140)
    ]
    counts = aggregate_pairwise(pairwise)
    for metric in ("overall", "naturalness", "engagement"):
        assert counts[metric]["A"] + counts[metric]["B"] == 140


# ---------------------------------------------------------------------------
# Criterion: subset filter and fraction split
# ---------------------------------------------------------------------------

def test_subset_filter():
    whitelist = ("navigation", "weather", "hotel", "attraction", "restaurant")
    dialogs = []
    for i in range(300):
        d = build_dialog(f"ok{i}")
        d.extra["services"] = [whitelist[i % 5]]
        dialogs.append(d)
    for i in range(60):
        d = build_dialog(f"bad{i}")
        d.extra["services"] = ["banking" if i % 2 else "train"]
        dialogs.append(d)
    dialogs.extend(build_dialog(f"un{i}") for i in range(15))

    result = filter_incar_subset(dialogs, whitelist=whitelist, cap=220, seed=7)
    assert len(result.dialogs) == 220
    allowed = set(whitelist)
    for dialog in result.dialogs:
        assert all(s in allowed for s in dialog.extra["services"])
    assert result.excluded == 60
    assert result.skipped_unlabeled == 15

    pool = [build_dialog(f"k{i}") for i in range(2424)]
    assert len(split_fraction(pool, 0.1, seed=4)) == 242


# ---------------------------------------------------------------------------
# Criterion: annotation service (crash restart, duplicates, summary parity)
# ---------------------------------------------------------------------------

def test_annotation_service(tmp_path):
    store = AnnotationStore(tmp_path / "state")
    dialogs = [build_dialog(f"d{i}") for i in range(5)]
    session = store.create_session("intrinsic", intrinsic_items(dialogs), ["e1", "e2"])

    # 8 fully rated (evaluator, item) pairs = 48 records, plus 2 partial = 50
    judgments = [
        (evaluator, item_id, metric)
        for evaluator, item_ids in (
            ("e1", ["d0", "d1", "d2", "d3"]),
            ("e2", ["d0", "d1", "d2", "d4"]),
        )
        for item_id in item_ids
        for metric in INTRINSIC_METRICS
    ]
    judgments += [("e1", "d4", INTRINSIC_METRICS[0]), ("e1", "d4", INTRINSIC_METRICS[1])]
    values = iter([3, 4, 5, 2, 4, 5, 3, 4] * 20)
    for submitted, (evaluator, item_id, metric) in enumerate(judgments):
        store.submit_rating(
            session.id,
            RatingRecord(
                evaluator_id=evaluator,
                item_id=item_id,
                metric_name=metric,
                value=next(values),
                timestamp=float(submitted),
            ),
        )
    assert len(judgments) == 50
    assert len(store.log_path.read_text().splitlines()) == 50

    snapshot = {
        "e1": store.next_item(session.id, "e1"),
        "e2": store.next_item(session.id, "e2"),
        "summary": store.summary(session.id),
    }

    reborn = AnnotationStore(tmp_path / "state")
    assert reborn.next_item(session.id, "e1") == snapshot["e1"]
    assert reborn.next_item(session.id, "e2") == snapshot["e2"]
    assert reborn.summary(session.id) == snapshot["summary"]

    with pytest.raises(DuplicateRatingError):
        reborn.submit_rating(
            session.id,
            RatingRecord(evaluator_id="e1", item_id="d0", metric_name="naturalness", value=1),
        )
    assert len(reborn.log_path.read_text().splitlines()) == 50

    log_records = [
        RatingRecord.from_json(json.loads(line))
        for line in reborn.log_path.read_text().splitlines()
    ]
    expected = aggregate_likert(log_records, allow_partial=True)
    got = reborn.summary(session.id)["likert"]
    assert set(got) == set(expected)
    for metric, want in expected.items():
        assert got[metric]["mean"] == pytest.approx(want.mean, abs=1e-12)
        assert got[metric]["half_width"] == pytest.approx(want.half_width, abs=1e-12)
