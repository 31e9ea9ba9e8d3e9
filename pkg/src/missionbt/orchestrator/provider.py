"""Language-model providers: scripted playbooks for offline runs and a live HTTP backend."""

from __future__ import annotations

import json
import math
import os
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import yaml


class ProviderError(RuntimeError):
    """The provider could not produce a response (network, exhausted playbook, ...)."""


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: Usage) -> Usage:
        return Usage(self.input_tokens + other.input_tokens, self.output_tokens + other.output_tokens)


class Provider(Protocol):
    def complete(self, stage: str, prompt: str) -> tuple[str, Usage]: ...


def estimate_tokens(text: str) -> int:
    """Rough, deterministic token count (~4 characters per token)."""
    return math.ceil(len(text) / 4)


@dataclass
class Playbook:
    mission_id: str
    mode: str  # "template" | "raw"
    expect: str  # "completed" | "irreparable"
    entries: list[tuple[str, str]]
    note: str = ""

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> Playbook:
        if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
            raise ProviderError("playbook must be a mapping with an 'entries' list")
        entries = []
        for k, entry in enumerate(data["entries"]):
            if not isinstance(entry, dict) or "stage" not in entry or "response" not in entry:
                raise ProviderError(f"playbook entry {k} needs 'stage' and 'response'")
            response = entry["response"]
            if not isinstance(response, str):
                response = json.dumps(response, sort_keys=True)
            entries.append((str(entry["stage"]), response))
        return cls(
            mission_id=str(data.get("mission_id", "")),
            mode=str(data.get("mode", "template")),
            expect=str(data.get("expect", "completed")),
            entries=entries,
            note=str(data.get("note", "")),
        )

    @classmethod
    def load(cls, path: str | Path) -> Playbook:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"playbook not found: {path}")
        return cls.from_data(yaml.safe_load(path.read_text()))


class ScriptedProvider:
    """Replays responses keyed by stage tag, in file order within each stage."""

    def __init__(self, playbook: Playbook):
        self.playbook = playbook
        self._queues: dict[str, deque[str]] = defaultdict(deque)
        for stage, response in playbook.entries:
            self._queues[stage].append(response)
        self.calls: dict[str, int] = defaultdict(int)

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedProvider:
        return cls(Playbook.load(path))

    def complete(self, stage: str, prompt: str) -> tuple[str, Usage]:
        queue = self._queues.get(stage)
        if not queue:
            raise ProviderError(
                f"playbook exhausted for stage {stage!r} (call #{self.calls[stage] + 1})"
            )
        self.calls[stage] += 1
        response = queue.popleft()
        return response, Usage(estimate_tokens(prompt), estimate_tokens(response))

    def remaining(self) -> dict[str, int]:
        return {stage: len(q) for stage, q in self._queues.items() if q}


SYSTEM_PROMPT = (
    "You are the planning component of a multi-robot coordination system. "
    "Answer in exactly the format requested, with no commentary."
)


class LiveProvider:
    """OpenAI-style chat-completions endpoint.

    Configured from ``MISSIONBT_API_URL``, ``MISSIONBT_MODEL`` and
    ``MISSIONBT_API_KEY`` unless given explicitly.
    """

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        *,
        timeout: float = 120.0,
        transport: Any = None,
    ):
        import httpx

        self.base_url = (base_url or os.environ.get("MISSIONBT_API_URL") or "https://api.openai.com/v1").rstrip("/")
        self.model = model or os.environ.get("MISSIONBT_MODEL") or "gpt-4.1"
        key = api_key if api_key is not None else os.environ.get("MISSIONBT_API_KEY", "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def complete(self, stage: str, prompt: str) -> tuple[str, Usage]:
        import httpx

        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": prompt},
            ],
        }
        try:
            resp = self._client.post(f"{self.base_url}/chat/completions", json=body)
            resp.raise_for_status()
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"{stage}: provider request failed: {exc}") from None
        usage = data.get("usage") or {}
        return text, Usage(int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))
