"""Read-only converters from public task-oriented dialog dataset layouts
into the Dialog model, with service labels carried in dialog.extra["services"]
for the in-car subset filter. The datasets themselves are never bundled;
paths point at files the user downloaded.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import Dialog, DomainTag, Scenario, Speaker, Turn, make_dialog
from .evalharness import normalize_service

_SERVICE_DOMAIN = {
    "navigation": DomainTag.NAVIGATION,
    "navigate": DomainTag.NAVIGATION,
    "taxi": DomainTag.NAVIGATION,
    "train": DomainTag.NAVIGATION,
    "bus": DomainTag.NAVIGATION,
    "travel": DomainTag.NAVIGATION,
    "ridesharing": DomainTag.NAVIGATION,
    "weather": DomainTag.WEATHER,
    "hotel": DomainTag.LOCAL_ATTRACTIONS,
    "attraction": DomainTag.LOCAL_ATTRACTIONS,
    "restaurant": DomainTag.LOCAL_ATTRACTIONS,
    "schedule": DomainTag.CAR_FUNCTIONS,
    "calendar": DomainTag.CAR_FUNCTIONS,
    "music": DomainTag.ENTERTAINMENT,
    "media": DomainTag.ENTERTAINMENT,
    "movie": DomainTag.ENTERTAINMENT,
}


def _domain_for_services(services: list[str]) -> DomainTag:
    for service in services:
        domain = _SERVICE_DOMAIN.get(normalize_service(service))
        if domain is not None:
            return domain
    return DomainTag.LOCAL_ATTRACTIONS


def _build(dialog_id: str, services: list[str], utterances: list[tuple[Speaker, str]],
           scenario_text: str) -> Dialog:
    domain = _domain_for_services(services)
    kept = [(speaker, text) for speaker, text in utterances if text.strip()]
    turns = [
        Turn(speaker=speaker, text=text, turn_index=i)
        for i, (speaker, text) in enumerate(kept)
    ]
    return make_dialog(
        id=dialog_id,
        domain=domain,
        scenario=Scenario(id=f"{dialog_id}-scenario", domain=domain, text=scenario_text),
        turns=turns,
        extra={"services": services},
    )


def read_kvret(path: str | Path) -> list[Dialog]:
    """KVRET as published: a JSON array of dialogues, each with
    scenario.task.intent and a "dialogue" list of driver/assistant turns."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    dialogs: list[Dialog] = []
    for i, entry in enumerate(data):
        intent = entry.get("scenario", {}).get("task", {}).get("intent", "unknown")
        uuid = entry.get("scenario", {}).get("uuid", f"kvret-{i:05d}")
        utterances: list[tuple[Speaker, str]] = []
        for turn in entry.get("dialogue", []):
            speaker = Speaker.DRIVER if turn.get("turn") == "driver" else Speaker.CAR_AI
            utterances.append((speaker, turn.get("data", {}).get("utterance", "")))
        dialogs.append(
            _build(str(uuid), [intent], utterances, f"KVRET {intent} task")
        )
    return dialogs


def _read_user_system(path: str | Path, id_key: str, prefix: str) -> list[Dialog]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    dialogs: list[Dialog] = []
    for i, entry in enumerate(data):
        dialog_id = str(entry.get(id_key, f"{prefix}-{i:05d}"))
        services = [str(s) for s in entry.get("services", [])]
        utterances = [
            (
                Speaker.DRIVER if turn.get("speaker", "").upper() == "USER" else Speaker.CAR_AI,
                turn.get("utterance", ""),
            )
            for turn in entry.get("turns", [])
        ]
        dialogs.append(
            _build(dialog_id, services, utterances, f"{prefix} dialog over {', '.join(services) or 'unknown services'}")
        )
    return dialogs


def read_multiwoz(path: str | Path) -> list[Dialog]:
    """MultiWOZ 2.2 layout: array of {dialogue_id, services, turns:[{speaker
    USER/SYSTEM, utterance}]}."""
    return _read_user_system(path, "dialogue_id", "multiwoz")


def read_sgd(path: str | Path) -> list[Dialog]:
    """Schema-Guided Dialogue layout: same surface as MultiWOZ 2.2 for the
    fields this toolkit needs."""
    return _read_user_system(path, "dialogue_id", "sgd")
