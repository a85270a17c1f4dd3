"""Completion providers and token accounting.

Two backends implement ``complete(request) -> CompletionResponse``:

* :class:`OpenAICompatBackend` posts to ``{base_url}/chat/completions``.
* :class:`PlaybackBackend` replays canned responses keyed by the run schedule
  (project, process, role, phase, sprint, attempt), so it does not depend on
  prompt wording.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol

import httpx

from .domain import Phase, RoleKind
from .errors import ConfigError, GatewayError, PlaybackMiss, ProviderError, Timeout

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlaybackKey:
    project: str
    process: str
    role: str
    phase: str
    sprint: Optional[int]
    attempt: int

    def as_tuple(self) -> tuple:
        return (self.project, self.process, self.role, self.phase, self.sprint, self.attempt)

    def __str__(self) -> str:
        return "/".join("-" if v is None else str(v) for v in self.as_tuple())


@dataclass(frozen=True)
class CompletionRequest:
    model_label: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 4096
    key: Optional[PlaybackKey] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("prompts must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency: float

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0 or self.latency < 0:
            raise ValueError("token counts and latency must be non-negative")


class Backend(Protocol):
    def complete(self, req: CompletionRequest) -> CompletionResponse: ...


def approx_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


# --- playback ----------------------------------------------------------------

class PlaybackBackend:
    """Deterministic backend replaying responses from a playback document.

    The document is ``{"model": label, "entries": [...]}`` where every entry
    carries the key fields (``project``, ``process``, ``role``, ``phase``,
    ``sprint``, ``attempt``) plus ``text`` and optional ``prompt_tokens``,
    ``completion_tokens`` and ``latency``.
    """

    def __init__(self, entries: dict[tuple, dict], label: str = "playback"):
        self.entries = entries
        self.label = label

    @classmethod
    def from_entries(cls, entries: list[dict], label: str = "playback") -> "PlaybackBackend":
        table = {}
        for e in entries:
            key = PlaybackKey(
                project=e["project"],
                process=e["process"],
                role=e["role"],
                phase=e["phase"],
                sprint=e.get("sprint"),
                attempt=int(e.get("attempt", 0)),
            )
            table[key.as_tuple()] = e
        return cls(table, label)

    @classmethod
    def load(cls, path: str | Path) -> "PlaybackBackend":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            return cls.from_entries(doc["entries"], doc.get("model", Path(path).stem))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot load playback file {path}: {exc}") from exc

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        if req.key is None:
            raise PlaybackMiss(None)
        entry = self.entries.get(req.key.as_tuple())
        if entry is None:
            raise PlaybackMiss(req.key)
        text = entry["text"]
        prompt_tokens = entry.get("prompt_tokens")
        if prompt_tokens is None:
            prompt_tokens = approx_tokens(req.system_prompt + req.user_prompt)
        completion_tokens = entry.get("completion_tokens")
        if completion_tokens is None:
            completion_tokens = approx_tokens(text)
        return CompletionResponse(
            text=text,
            prompt_tokens=int(prompt_tokens),
            completion_tokens=int(completion_tokens),
            latency=float(entry.get("latency", 0.0)),
        )


# --- live --------------------------------------------------------------------

class OpenAICompatBackend:
    """Client for OpenAI-compatible ``/chat/completions`` endpoints.

    The API key is read from the environment variable named by
    ``credential_env`` at request time and never stored on the instance.
    """

    def __init__(
        self,
        base_url: str,
        credential_env: str = "OPENAI_API_KEY",
        timeout: float = 300.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.credential_env = credential_env
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.credential_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        payload = {
            "model": req.model_label,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        if req.seed is not None:
            payload["seed"] = req.seed
        started = time.perf_counter()
        try:
            resp = self._client.post(
                f"{self.base_url}/chat/completions", json=payload, headers=self._headers()
            )
        except httpx.TimeoutException as exc:
            raise Timeout(f"no response within {self.timeout}s") from exc
        except httpx.HTTPError as exc:
            raise ProviderError(0, str(exc)) from exc
        latency = time.perf_counter() - started
        if resp.status_code // 100 != 2:
            raise ProviderError(resp.status_code, resp.text)
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"] or ""
            usage = body.get("usage") or {}
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(resp.status_code, f"unexpected body: {resp.text[:200]}") from exc
        return CompletionResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency=latency,
        )

    def close(self):
        self._client.close()


def _transient(exc: GatewayError) -> bool:
    if isinstance(exc, Timeout):
        return True
    return isinstance(exc, ProviderError) and (exc.status == 0 or exc.transient)


def complete(
    backend: Backend,
    req: CompletionRequest,
    retries: int = 0,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> CompletionResponse:
    """Call ``backend`` and retry transient provider failures.

    Waits ``backoff * 2**n`` seconds before retry ``n``. Permanent errors and
    playback misses are raised immediately.
    """
    attempt = 0
    while True:
        try:
            return backend.complete(req)
        except (ProviderError, Timeout) as exc:
            if attempt >= retries or not _transient(exc):
                raise
            delay = backoff * (2 ** attempt)
            log.warning("transient provider error (%s); retrying in %.1fs", exc, delay)
            sleep(delay)
            attempt += 1


# --- accounting --------------------------------------------------------------

@dataclass(frozen=True)
class LedgerEntry:
    role: RoleKind
    phase: Phase
    prompt_tokens: int
    completion_tokens: int
    latency: float

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "phase": self.phase.to_dict(),
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency": self.latency,
        }


@dataclass
class TokenLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def record(self, role: RoleKind, phase: Phase, resp: CompletionResponse) -> "TokenLedger":
        self.entries.append(
            LedgerEntry(role, phase, resp.prompt_tokens, resp.completion_tokens, resp.latency)
        )
        return self

    def total_tokens(self) -> int:
        return sum(e.prompt_tokens + e.completion_tokens for e in self.entries)

    def total_latency(self) -> float:
        return math.fsum(e.latency for e in self.entries)

    def elapsed(self) -> float:
        """LLM time consumed so far; used as the run's logical clock."""
        return self.total_latency()

    def to_dict(self) -> dict:
        return {
            "total_tokens": self.total_tokens(),
            "total_latency": self.total_latency(),
            "entries": [e.to_dict() for e in self.entries],
        }


def record(ledger: TokenLedger, role: RoleKind, phase: Phase, resp: CompletionResponse) -> TokenLedger:
    return ledger.record(role, phase, resp)
