"""Pluggable chat-completion backend.

Two kinds: an HTTP client for any OpenAI-compatible `/chat/completions`
endpoint, and a deterministic scripted mock whose output is a pure function
of (seed, request) — the mock is what every test runs against, so the whole
pipeline is reproducible offline.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Optional

import requests

BACKOFF_BASE = 0.5
BACKOFF_CAP = 30.0


class BackendError(Exception):
    """Base class for backend failures."""


class BackendConfigError(BackendError):
    """Configuration problem detected before any network activity."""


class BackendUnavailableError(BackendError):
    """Network/timeout failure that survived all retries."""


class RequestRejectedError(BackendError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend rejected request: HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body[:200]


class EmptyCompletionError(BackendError):
    """Backend returned an empty completion."""


class Role(enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.7
    max_tokens: int = 256
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("request must carry at least one message")
        if self.messages[0].role != Role.SYSTEM:
            raise ValueError("first message must have role system")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    @property
    def system_text(self) -> str:
        return self.messages[0].content


class BackendKind(enum.Enum):
    HTTP = "http"
    MOCK = "mock"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    model_name: str = "mock-model"
    endpoint_url: str = ""
    auth_token_env: str = ""
    timeout: float = 30.0
    max_retries: int = 3
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")

    @classmethod
    def from_json(cls, obj: dict) -> "BackendConfig":
        return cls(
            kind=BackendKind(obj["kind"]),
            model_name=obj.get("model_name", "mock-model"),
            endpoint_url=obj.get("endpoint_url", ""),
            auth_token_env=obj.get("auth_token_env", ""),
            timeout=float(obj.get("timeout", 30.0)),
            max_retries=int(obj.get("max_retries", 3)),
            max_in_flight=int(obj.get("max_in_flight", 4)),
        )


# ---------------------------------------------------------------------------
# Deterministic mock
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def load_mock_bank() -> dict:
    """The versioned template bank shipped with the package
    (`data/mock_bank.json`)."""
    text = resources.files("discodrive").joinpath("data/mock_bank.json").read_text("utf-8")
    return json.loads(text)


def canonical_request(request: ChatRequest) -> str:
    """Stable serialization used as the mock's hash input (seed excluded,
    it is passed alongside)."""
    return json.dumps(
        {
            "messages": [[m.role.value, m.content] for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )


def detect_role(request: ChatRequest) -> str:
    """Pick the template-bank key from distinctive phrases in the system
    prompt. Falls back to ai_regular for unrecognized prompts."""
    sys_text = request.system_text
    if "conversation scenarios" in sys_text:
        return "scenario"
    if "wrap up the conversation" in sys_text:
        return "driver_concluding"
    if "friendly acknowledgment" in sys_text:
        return "ai_concluding"
    if "follow-up question" in sys_text:
        return "driver_regular"
    if "human driver" in sys_text:
        return "driver_regular"
    return "ai_regular"


_SLOT_RE = re.compile(r"\{(\w+)\}")
_COUNT_RE = re.compile(r"exactly (\d+)")


def _digest_int(*parts: object) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def _fill(bank: dict, key: str, rng_seed: int) -> str:
    import random

    rng = random.Random(rng_seed)
    template = rng.choice(bank["banks"][key])
    return _SLOT_RE.sub(lambda m: rng.choice(bank["slots"][m.group(1)]), template)


def mock_complete(seed: int, request: ChatRequest) -> str:
    """Deterministic completion: a pure function of (seed, request).

    Scenario-style prompts yield a numbered list sized by the "exactly N"
    phrase in the prompt; dialog prompts yield one slot-filled utterance.
    """
    bank = load_mock_bank()
    role = detect_role(request)
    canon = canonical_request(request)
    if role == "scenario":
        m = _COUNT_RE.search(request.system_text)
        count = int(m.group(1)) if m else 5
        items = [
            f"{i + 1}. " + _fill(bank, "scenario", _digest_int(seed, canon, i))
            for i in range(count)
        ]
        return "\n".join(items)
    return _fill(bank, role, _digest_int(seed, canon))


class MockBackend:
    """Pure, lock-free; the request's own seed (default 0) drives selection."""

    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(self, request: ChatRequest) -> str:
        return mock_complete(request.seed or 0, request).strip()


# ---------------------------------------------------------------------------
# HTTP client
# ---------------------------------------------------------------------------

Transport = Callable[[str, dict, dict, float], tuple[int, str]]


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, str]:
    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    return resp.status_code, resp.text


def backoff_delays(max_retries: int, jitter_rng=None) -> list[float]:
    """0.5s * 2^attempt capped at 30s, with +/-20% jitter when a jitter rng
    is supplied (the only OS-entropy path in the package; tests pass None)."""
    delays = []
    for attempt in range(max_retries):
        base = min(BACKOFF_BASE * (2 ** attempt), BACKOFF_CAP)
        if jitter_rng is not None:
            base *= jitter_rng.uniform(0.8, 1.2)
        delays.append(base)
    return delays


class HttpBackend:
    """OpenAI-style chat-completions client with retries and an in-flight
    limiter. The auth token is read from the environment per call and never
    appears in errors or logs."""

    def __init__(
        self,
        config: BackendConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        jitter_rng=None,
    ):
        if config.kind != BackendKind.HTTP:
            raise BackendConfigError("HttpBackend requires kind=http")
        if not config.endpoint_url:
            raise BackendConfigError("http backend requires endpoint_url")
        self.config = config
        self._transport = transport or _requests_transport
        self._sleep = sleep
        self._jitter_rng = jitter_rng
        self._limiter = threading.Semaphore(config.max_in_flight)

    def _resolve_token(self) -> str:
        env = self.config.auth_token_env
        if not env:
            return ""
        token = os.environ.get(env)
        if token is None:
            raise BackendConfigError(f"auth token env var {env!r} is not set")
        return token

    def _payload(self, request: ChatRequest) -> dict:
        payload = {
            "model": self.config.model_name,
            "messages": [
                {"role": m.role.value, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        return payload

    def complete(self, request: ChatRequest) -> str:
        token = self._resolve_token()
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        url = self.config.endpoint_url.rstrip("/") + "/chat/completions"
        payload = self._payload(request)
        delays = backoff_delays(self.config.max_retries, self._jitter_rng)
        last_error: Exception | None = None
        with self._limiter:
            for attempt in range(self.config.max_retries + 1):
                try:
                    status, body = self._transport(url, payload, headers, self.config.timeout)
                except (requests.ConnectionError, requests.Timeout, TimeoutError, ConnectionError) as exc:
                    last_error = exc
                    status, body = None, ""
                if status is not None:
                    if status == 200:
                        return self._extract(body)
                    if status in (429,) or status >= 500:
                        last_error = RequestRejectedError(status, body)
                    else:
                        raise RequestRejectedError(status, body)
                if attempt < self.config.max_retries:
                    self._sleep(delays[attempt])
        raise BackendUnavailableError(
            f"backend unavailable after {self.config.max_retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _extract(body: str) -> str:
        try:
            obj = json.loads(body)
            text = obj["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailableError(f"malformed completion body: {exc}") from exc
        text = (text or "").strip()
        if not text:
            raise EmptyCompletionError("backend returned an empty completion")
        return text


def build_backend(config: BackendConfig, **kwargs):
    if config.kind == BackendKind.MOCK:
        return MockBackend(config)
    return HttpBackend(config, **kwargs)


def complete(config: BackendConfig, request: ChatRequest) -> str:
    """One-shot convenience wrapper; pipelines should hold a backend
    instance so the in-flight limiter is shared."""
    return build_backend(config).complete(request)
