"""Append-only record of every provider exchange, plus usage/cost accounting."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator


@dataclass(frozen=True)
class TranscriptRecord:
    stage: str
    attempt: int  # 0 for the first call, 1.. for repairs
    prompt: str
    response: str
    input_tokens: int
    output_tokens: int
    valid: bool
    diagnostics: tuple[str, ...] = ()
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = list(self.diagnostics)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> TranscriptRecord:
        return cls(
            stage=str(data["stage"]),
            attempt=int(data["attempt"]),
            prompt=str(data["prompt"]),
            response=str(data["response"]),
            input_tokens=int(data["input_tokens"]),
            output_tokens=int(data["output_tokens"]),
            valid=bool(data["valid"]),
            diagnostics=tuple(data.get("diagnostics") or ()),
            note=str(data.get("note") or ""),
        )


@dataclass
class Transcript:
    records: list[TranscriptRecord] = field(default_factory=list)

    def append(self, record: TranscriptRecord) -> None:
        self.records.append(record)

    def __iter__(self) -> Iterator[TranscriptRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def stages(self) -> list[str]:
        return [r.stage for r in self.records]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.records)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> Transcript:
        return cls([TranscriptRecord.from_dict(r) for r in records])

    @classmethod
    def load(cls, path: str | Path) -> Transcript:
        lines = Path(path).read_text().splitlines()
        return cls.from_records(json.loads(line) for line in lines if line.strip())


@dataclass(frozen=True)
class Accounting:
    input_tokens: int
    output_tokens: int
    cost: float
    errors: int
    calls: int

    @property
    def tokens_per_error(self) -> float | None:
        """Output tokens per validation failure; None (rendered as a dash) without failures."""
        if self.errors == 0:
            return None
        return self.output_tokens / self.errors

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cost": self.cost,
            "errors": self.errors,
            "calls": self.calls,
            "tokens_per_error": self.tokens_per_error,
        }


def account(
    transcript: Iterable[TranscriptRecord],
    price_in: float = 0.0,
    price_out: float = 0.0,
) -> Accounting:
    """Sum usage over a transcript. Prices are per token."""
    tin = tout = errors = calls = 0
    for r in transcript:
        calls += 1
        tin += r.input_tokens
        tout += r.output_tokens
        if not r.valid:
            errors += 1
    return Accounting(tin, tout, tin * price_in + tout * price_out, errors, calls)
