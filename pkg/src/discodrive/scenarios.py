"""Few-shot scenario generation with deduplication (pipeline step 1)."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .backend import BackendConfig, ChatMessage, ChatRequest, Role, build_backend
from .corpus import DomainTag, Scenario
from .tokens import word_tokens


class ScenarioParseError(ValueError):
    def __init__(self, raw_text: str):
        super().__init__(f"no scenarios could be parsed from completion: {raw_text[:200]!r}")
        self.raw_text = raw_text


class InsufficientDiversityError(RuntimeError):
    def __init__(self, unique_count: int, target: int):
        super().__init__(
            f"dedup budget exhausted: {unique_count} unique scenarios obtained, {target} requested"
        )
        self.unique_count = unique_count
        self.target = target


@dataclass(frozen=True)
class FewShotBank:
    domain: DomainTag
    examples: tuple[str, ...]

    def __post_init__(self) -> None:
        if not 10 <= len(self.examples) <= 20:
            raise ValueError(f"bank needs 10-20 examples, got {len(self.examples)}")
        if any(not e.strip() for e in self.examples):
            raise ValueError("bank examples must be non-empty")
        if len(set(self.examples)) != len(self.examples):
            raise ValueError("bank examples must be distinct")


def load_fewshot_bank(domain: DomainTag, path: str | Path | None = None) -> FewShotBank:
    """Load a bank from a JSON file, defaulting to the packaged one."""
    if path is None:
        text = resources.files("discodrive").joinpath(
            f"data/fewshot/{domain.value}.json"
        ).read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    obj = json.loads(text)
    return FewShotBank(domain=DomainTag(obj["domain"]), examples=tuple(obj["examples"]))


def build_scenario_prompt(bank: FewShotBank, batch_size: int, seed: int | None = None) -> ChatRequest:
    """System prompt asking for batch_size numbered scenarios, with every
    bank example included verbatim."""
    if not 1 <= batch_size <= 25:
        raise ValueError(f"batch_size must be in [1, 25], got {batch_size}")
    examples = "\n".join(f"{i + 1}. {e}" for i, e in enumerate(bank.examples))
    system = (
        "You are generating training data for an in-car driver assistant. "
        f"Generate exactly {batch_size} diverse, single-situation conversation scenarios "
        f"for the {bank.domain.display_name} domain. Each scenario is one to three "
        'sentences describing what the driver wants, written in third person '
        '("The driver wants to ...").\n\n'
        "Format your answer as a numbered list with one scenario per line and no "
        "extra commentary.\n\n"
        "Use these human-written examples as a guide for tone and scope:\n"
        f"{examples}"
    )
    return ChatRequest(
        messages=(ChatMessage(Role.SYSTEM, system),),
        temperature=0.9,
        max_tokens=1024,
        seed=seed,
    )


_NUMBERED_RE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")
_BULLET_RE = re.compile(r"^\s*[-*•]\s+(.*\S)\s*$")


def parse_scenarios(completion_text: str, domain: DomainTag) -> list[Scenario]:
    """Split a numbered-list completion into scenarios. Falls back to
    bullets, then to bare non-empty lines."""
    lines = completion_text.splitlines()
    items = [m.group(1) for line in lines if (m := _NUMBERED_RE.match(line))]
    if not items:
        items = [m.group(1) for line in lines if (m := _BULLET_RE.match(line))]
    if not items:
        items = [line.strip() for line in lines if line.strip()]
    if not items:
        raise ScenarioParseError(completion_text)
    return [
        Scenario(id=f"{domain.value}-raw{i}", domain=domain, text=item)
        for i, item in enumerate(items)
    ]


_STRIP_RE = re.compile(r"[^\w\s]", re.UNICODE)


def _dedup_key(text: str) -> str:
    return " ".join(_STRIP_RE.sub("", text.casefold()).split())


def _token_set(text: str) -> frozenset[str]:
    return frozenset(t.norm for t in word_tokens(text))


def is_duplicate(text: str, accepted_keys: set[str], accepted_tokens: list[frozenset[str]],
                 jaccard_threshold: float = 0.8) -> bool:
    """Case-folded punctuation-stripped exact match OR token Jaccard above
    the threshold against any accepted scenario."""
    if _dedup_key(text) in accepted_keys:
        return True
    ts = _token_set(text)
    if not ts:
        return True
    for other in accepted_tokens:
        union = len(ts | other)
        if union and len(ts & other) / union > jaccard_threshold:
            return True
    return False


def _derive_seed(*parts: object) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def generate_scenarios(
    config: BackendConfig,
    bank: FewShotBank,
    target_count: int,
    seed: int,
    batch_size: int = 10,
    backend=None,
) -> list[Scenario]:
    """Batched generation loop: request, parse, dedup, repeat until
    target_count unique scenarios or the candidate budget (10x target)
    runs out."""
    if target_count < 0:
        raise ValueError("target_count must be >= 0")
    if target_count == 0:
        return []
    backend = backend or build_backend(config)
    budget = 10 * target_count
    accepted: list[Scenario] = []
    keys: set[str] = set()
    token_sets: list[frozenset[str]] = []
    generated = 0
    batch_index = 0
    while len(accepted) < target_count and generated < budget:
        request = build_scenario_prompt(
            bank, batch_size, seed=_derive_seed(seed, "scenario-batch", batch_index)
        )
        for item in parse_scenarios(backend.complete(request), bank.domain):
            generated += 1
            if is_duplicate(item.text, keys, token_sets):
                continue
            keys.add(_dedup_key(item.text))
            token_sets.append(_token_set(item.text))
            accepted.append(item)
            if len(accepted) == target_count:
                break
        batch_index += 1
    if len(accepted) < target_count:
        raise InsufficientDiversityError(len(accepted), target_count)
    return [
        replace(sc, id=f"{bank.domain.value}-{i:04d}") for i, sc in enumerate(accepted)
    ]
