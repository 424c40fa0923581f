from __future__ import annotations

import pytest

from discodrive.backend import BackendConfig, BackendKind
from discodrive.corpus import DomainTag, Scenario, Speaker, Turn, make_dialog


@pytest.fixture
def mock_config() -> BackendConfig:
    return BackendConfig(kind=BackendKind.MOCK)


def build_dialog(
    dialog_id: str = "d1",
    domain: DomainTag = DomainTag.NAVIGATION,
    num_turns: int = 6,
    text: str | None = None,
):
    """A structurally valid dialog for tests that don't care about content."""
    turns = []
    for i in range(num_turns):
        speaker = Speaker.DRIVER if i % 2 == 0 else Speaker.CAR_AI
        turns.append(
            Turn(speaker=speaker, text=text or f"utterance {i} of {dialog_id}", turn_index=i)
        )
    scenario = Scenario(id=f"{dialog_id}-sc", domain=domain, text=f"scenario for {dialog_id}")
    return make_dialog(id=dialog_id, domain=domain, scenario=scenario, turns=turns)


# ---------------------------------------------------------------------------
# Acceptance reporting: one pass/fail line per criterion after the run
# ---------------------------------------------------------------------------

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance_results[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_results):
        outcome = _acceptance_results[nodeid]
        label = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}  {nodeid.split('::')[-1]}")
