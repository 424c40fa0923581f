"""Turn-based driver/car-AI simulation (pipeline step 2).

Each dialog alternates a driver prompt and a car-AI prompt, driver first.
Conversation history rendered into any prompt is windowed to the last k
turns (default six). The final driver turn and the final car-AI turn switch
to the concluding templates; every driver turn is post-tagged with the
rule-based disfluency tagger before being stored.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import __version__
from .backend import (
    BackendConfig,
    BackendError,
    ChatMessage,
    ChatRequest,
    EmptyCompletionError,
    Role,
    build_backend,
)
from .corpus import (
    ALLOWED_TURN_LENGTHS,
    Corpus,
    Dialog,
    DomainTag,
    Scenario,
    Speaker,
    Turn,
    make_dialog,
    validate_dialog,
)
from .disfluency import LexiconSet, tag_disfluencies


class PromptStage(enum.Enum):
    OPENING = "opening"
    REGULAR = "regular"
    CONCLUDING = "concluding"


@dataclass(frozen=True)
class SimulationConfig:
    num_turns: int
    history_window: int = 6
    driver_temperature: float = 0.9
    ai_temperature: float = 0.7
    seed: int = 0
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if self.num_turns not in ALLOWED_TURN_LENGTHS:
            raise ValueError(f"num_turns must be one of {ALLOWED_TURN_LENGTHS}")
        if self.history_window < 1:
            raise ValueError("history_window must be >= 1")


@dataclass(frozen=True)
class PromptTemplates:
    driver_regular: str
    driver_concluding: str
    ai_regular: str
    ai_concluding: str
    version: str

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "PromptTemplates":
        """Read the four template files; version is a content hash so
        provenance pins exactly what was prompted."""

        def read(name: str) -> str:
            if directory is None:
                return resources.files("discodrive").joinpath(
                    f"data/prompts/{name}.txt"
                ).read_text("utf-8")
            return (Path(directory) / f"{name}.txt").read_text(encoding="utf-8")

        texts = {
            name: read(name)
            for name in ("driver_regular", "driver_concluding", "ai_regular", "ai_concluding")
        }
        digest = hashlib.sha256("\x1f".join(texts[k] for k in sorted(texts)).encode()).hexdigest()
        return cls(version=digest[:12], **texts)


_DEFAULT_TEMPLATES: PromptTemplates | None = None


def default_templates() -> PromptTemplates:
    global _DEFAULT_TEMPLATES
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = PromptTemplates.load()
    return _DEFAULT_TEMPLATES


def stage_for_turn(turn_index: int, num_turns: int) -> PromptStage:
    """Concluding exactly at the final driver turn (num_turns-2) and the
    final car-AI turn (num_turns-1); opening at turn 0."""
    if turn_index >= num_turns - 2:
        return PromptStage.CONCLUDING
    if turn_index == 0:
        return PromptStage.OPENING
    return PromptStage.REGULAR


def window_history(history: Sequence[Turn], k: int) -> list[Turn]:
    """Last min(k, len) turns, order preserved."""
    if k < 1:
        raise ValueError("history window must be >= 1")
    return list(history[-k:])


_SPEAKER_LABELS = {Speaker.DRIVER: "Driver", Speaker.CAR_AI: "Car AI"}


def render_history(turns: Sequence[Turn]) -> str:
    return "\n".join(f"{_SPEAKER_LABELS[t.speaker]}: {t.text}" for t in turns)


def assemble_driver_prompt(
    scenario: Scenario,
    history: Sequence[Turn],
    stage: PromptStage,
    config: SimulationConfig | None = None,
    templates: PromptTemplates | None = None,
) -> ChatRequest:
    """System message is the verbatim template for the stage; the user
    message carries the scenario (opening only) and the windowed history."""
    config = config or SimulationConfig(num_turns=6)
    templates = templates or default_templates()
    template = (
        templates.driver_concluding
        if stage == PromptStage.CONCLUDING
        else templates.driver_regular
    )
    windowed = window_history(history, config.history_window)
    parts = []
    if stage == PromptStage.OPENING:
        parts.append(f"Scenario: {scenario.text}")
    if windowed:
        parts.append("Conversation so far:\n" + render_history(windowed))
    if not parts:
        parts.append("(conversation start)")
    return ChatRequest(
        messages=(
            ChatMessage(Role.SYSTEM, template),
            ChatMessage(Role.USER, "\n\n".join(parts)),
        ),
        temperature=config.driver_temperature,
        max_tokens=config.max_tokens,
    )


def assemble_ai_prompt(
    history: Sequence[Turn],
    stage: PromptStage,
    config: SimulationConfig | None = None,
    templates: PromptTemplates | None = None,
) -> ChatRequest:
    config = config or SimulationConfig(num_turns=6)
    templates = templates or default_templates()
    template = (
        templates.ai_concluding if stage == PromptStage.CONCLUDING else templates.ai_regular
    )
    windowed = window_history(history, config.history_window)
    content = (
        "Conversation so far:\n" + render_history(windowed) if windowed else "(conversation start)"
    )
    return ChatRequest(
        messages=(
            ChatMessage(Role.SYSTEM, template),
            ChatMessage(Role.USER, content),
        ),
        temperature=config.ai_temperature,
        max_tokens=config.max_tokens,
    )


class SimulationError(RuntimeError):
    """Aborted simulation; carries the partial transcript for debugging."""

    def __init__(self, message: str, scenario: Scenario, partial: Sequence[Turn]):
        super().__init__(message)
        self.scenario = scenario
        self.partial_transcript = list(partial)


def _derive_seed(*parts: object) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def simulate_dialog(
    config: SimulationConfig,
    backend_config: BackendConfig,
    scenario: Scenario,
    lexicons: LexiconSet | None = None,
    templates: PromptTemplates | None = None,
    backend=None,
) -> Dialog:
    """Simulate one dialog: num_turns turns, driver first, concluding
    prompts on the last exchange, driver turns post-tagged."""
    backend = backend or build_backend(backend_config)
    templates = templates or default_templates()
    history: list[Turn] = []
    for i in range(config.num_turns):
        stage = stage_for_turn(i, config.num_turns)
        is_driver = i % 2 == 0
        if is_driver:
            request = assemble_driver_prompt(scenario, history, stage, config, templates)
        else:
            request = assemble_ai_prompt(history, stage, config, templates)
        request = replace(request, seed=_derive_seed(config.seed, scenario.id, i))
        try:
            try:
                text = backend.complete(request)
            except EmptyCompletionError:
                retry = replace(request, seed=_derive_seed(config.seed, scenario.id, i, "retry"))
                text = backend.complete(retry)
        except BackendError as exc:
            raise SimulationError(
                f"backend failed at turn {i}: {exc}", scenario, history
            ) from exc
        spans = tuple(tag_disfluencies(text, lexicons)) if is_driver else ()
        history.append(
            Turn(
                speaker=Speaker.DRIVER if is_driver else Speaker.CAR_AI,
                text=text,
                turn_index=i,
                disfluency_spans=spans,
            )
        )
    dialog = make_dialog(
        id=f"dlg-{scenario.id}",
        domain=scenario.domain,
        scenario=scenario,
        turns=history,
    )
    report = validate_dialog(dialog, strict_lengths=True)
    if not report.ok:
        raise SimulationError(
            f"generated dialog failed validation: {report.violations}", scenario, history
        )
    return dialog


# ---------------------------------------------------------------------------
# Bulk generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationConfig:
    backend: BackendConfig
    seed: int = 0
    history_window: int = 6
    driver_temperature: float = 0.9
    ai_temperature: float = 0.7
    turn_length_mode: str = "balanced"   # "balanced" | "uniform" | "fixed"
    fixed_turn_length: int | None = None

    def __post_init__(self) -> None:
        if self.turn_length_mode not in ("balanced", "uniform", "fixed"):
            raise ValueError("turn_length_mode must be balanced, uniform, or fixed")
        if self.turn_length_mode == "fixed" and self.fixed_turn_length not in ALLOWED_TURN_LENGTHS:
            raise ValueError(f"fixed_turn_length must be one of {ALLOWED_TURN_LENGTHS}")


@dataclass
class GenerationResult:
    corpus: Corpus
    failures: list[dict] = field(default_factory=list)


def assign_turn_lengths(
    scenarios: Sequence[Scenario], config: GenerationConfig
) -> list[int]:
    """Balanced mode cycles the allowed lengths within each domain (equal
    counts per length per domain); uniform mode draws per scenario from a
    seeded stream."""
    lengths: list[int] = []
    per_domain_count: dict[DomainTag, int] = {}
    for scenario in scenarios:
        if config.turn_length_mode == "fixed":
            lengths.append(config.fixed_turn_length)  # type: ignore[arg-type]
        elif config.turn_length_mode == "balanced":
            k = per_domain_count.get(scenario.domain, 0)
            per_domain_count[scenario.domain] = k + 1
            lengths.append(ALLOWED_TURN_LENGTHS[k % len(ALLOWED_TURN_LENGTHS)])
        else:
            import random

            rng = random.Random(_derive_seed(config.seed, "length", scenario.id))
            lengths.append(rng.choice(ALLOWED_TURN_LENGTHS))
    return lengths


def generate_corpus(
    config: GenerationConfig,
    scenarios: Sequence[Scenario],
    lexicons: LexiconSet | None = None,
    templates: PromptTemplates | None = None,
    backend=None,
) -> GenerationResult:
    """One dialog per scenario; failures collected per scenario, partial
    corpus still returned."""
    templates = templates or default_templates()
    backend = backend or build_backend(config.backend)
    lengths = assign_turn_lengths(scenarios, config)
    dialogs: list[Dialog] = []
    failures: list[dict] = []
    for scenario, num_turns in zip(scenarios, lengths):
        sim_config = SimulationConfig(
            num_turns=num_turns,
            history_window=config.history_window,
            driver_temperature=config.driver_temperature,
            ai_temperature=config.ai_temperature,
            seed=config.seed,
        )
        try:
            dialogs.append(
                simulate_dialog(
                    sim_config, config.backend, scenario,
                    lexicons=lexicons, templates=templates, backend=backend,
                )
            )
        except SimulationError as exc:
            failures.append(
                {"scenario_id": scenario.id, "error": str(exc), "turns_completed": len(exc.partial_transcript)}
            )
    provenance = {
        "generator_version": __version__,
        "seed": config.seed,
        "backend": {"kind": config.backend.kind.value, "model": config.backend.model_name},
        "template_version": templates.version,
        "turn_length_mode": config.turn_length_mode,
        "history_window": config.history_window,
    }
    return GenerationResult(
        corpus=Corpus(dialogs=tuple(dialogs), provenance=provenance),
        failures=failures,
    )
