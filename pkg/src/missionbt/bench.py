"""Benchmark harness: every dataset mission, R repeats, per-category summary table."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Callable, Sequence

from missionbt.engine import run_mission
from missionbt.missionspec import CATEGORIES, MissionError, MissionSpec, load_mission_file
from missionbt.orchestrator import LiveProvider, Provider, ScriptedProvider

log = logging.getLogger(__name__)

ProviderFactory = Callable[[MissionSpec, bool], Provider]


def dataset_root() -> Path:
    return Path(__file__).resolve().parent / "dataset"


def mission_files(dataset_dir: str | Path) -> list[Path]:
    root = Path(dataset_dir)
    missions = root / "missions" if (root / "missions").is_dir() else root
    return sorted(missions.glob("*.json"))


def playbook_path(mission_file: str | Path, mission_id: str, template: bool) -> Path:
    """Conventional playbook location: ``<missions>/../playbooks/<id>[.raw].yaml``."""
    suffix = "" if template else ".raw"
    return Path(mission_file).resolve().parent.parent / "playbooks" / f"{mission_id}{suffix}.yaml"


def mock_factory(mission_file: Path) -> ProviderFactory:
    def make(spec: MissionSpec, template: bool) -> Provider:
        return ScriptedProvider.from_file(playbook_path(mission_file, spec.mission_id, template))

    return make


def live_factory(_mission_file: Path) -> ProviderFactory:
    return lambda spec, template: LiveProvider()


@dataclass
class MissionResult:
    mission_id: str
    category: str
    runs: int
    successes: int
    avg_input_tokens: float
    avg_output_tokens: float
    avg_cost: float
    errors: int
    tokens_per_error: float | None
    reasons: list[str] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs if self.runs else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["success_rate"] = self.success_rate
        return d


@dataclass
class SummaryRow:
    category: str
    missions: int
    success_rate: float
    avg_input_tokens: float
    avg_output_tokens: float
    avg_cost: float
    tokens_per_error: float | None


def summarize(category: str, results: Sequence[MissionResult]) -> SummaryRow:
    """Arithmetic means of per-mission values; tokens/error only over missions that had errors."""
    if not results:
        return SummaryRow(category, 0, 0.0, 0.0, 0.0, 0.0, None)
    per_error = [r.tokens_per_error for r in results if r.tokens_per_error is not None]
    return SummaryRow(
        category,
        len(results),
        fmean(r.success_rate for r in results),
        fmean(r.avg_input_tokens for r in results),
        fmean(r.avg_output_tokens for r in results),
        fmean(r.avg_cost for r in results),
        fmean(per_error) if per_error else None,
    )


@dataclass
class BenchmarkResult:
    repeats: int
    modes: dict[str, list[MissionResult]]

    def rows(self, mode: str) -> list[SummaryRow]:
        results = self.modes[mode]
        rows = [summarize(c, [r for r in results if r.category == c]) for c in CATEGORIES]
        rows.append(summarize("Overall", results))
        return rows

    def to_dict(self) -> dict:
        return {
            "repeats": self.repeats,
            "modes": {
                mode: {
                    "rows": [asdict(row) for row in self.rows(mode)],
                    "missions": [r.to_dict() for r in results],
                }
                for mode, results in self.modes.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        lines = []
        for mode in self.modes:
            lines.append(f"[{mode}]  repeats={self.repeats}")
            lines.append(
                f"{'Category':<10}{'Success':>9}{'Tokens in (k)':>15}{'Tokens out (k)':>16}{'Cost':>10}"
                f"{'Tokens/Err (k)':>16}"
            )
            for row in self.rows(mode):
                tpe = "-" if row.tokens_per_error is None else f"{row.tokens_per_error / 1000:.2f}"
                lines.append(
                    f"{row.category:<10}{row.success_rate:>9.2f}{row.avg_input_tokens / 1000:>15.2f}"
                    f"{row.avg_output_tokens / 1000:>16.2f}{row.avg_cost:>10.4f}{tpe:>16}"
                )
            lines.append("")
        return "\n".join(lines)


def bench_mission(
    mission_file: Path,
    factory: ProviderFactory,
    repeats: int,
    template: bool,
    price_in: float = 0.0,
    price_out: float = 0.0,
) -> MissionResult:
    try:
        spec = load_mission_file(mission_file)
    except (MissionError, OSError) as exc:
        return MissionResult(mission_file.stem, "?", repeats, 0, 0.0, 0.0, 0.0, 0, None, [f"load: {exc}"] * repeats)
    tin = tout = cost = 0.0
    errors = successes = 0
    reasons = []
    for _ in range(repeats):
        try:
            report = run_mission(spec, factory(spec, template), use_template=template,
                                 price_in=price_in, price_out=price_out)
        except Exception as exc:  # one broken mission must not abort the suite
            log.error("%s: %s", spec.mission_id, exc)
            reasons.append(f"error: {exc}")
            continue
        successes += report.success
        reasons.append(report.reason.value)
        tin += report.usage.input_tokens
        tout += report.usage.output_tokens
        cost += report.usage.cost
        errors += report.usage.errors
    return MissionResult(
        spec.mission_id,
        spec.category or "?",
        repeats,
        successes,
        tin / repeats,
        tout / repeats,
        cost / repeats,
        errors,
        tout / errors if errors else None,
        reasons,
    )


def run_bench(
    dataset_dir: str | Path | None = None,
    repeats: int = 5,
    *,
    template_modes: Sequence[bool] = (True,),
    provider: str = "mock",
    price_in: float = 0.0,
    price_out: float = 0.0,
) -> BenchmarkResult:
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    files = mission_files(dataset_dir or dataset_root())
    make = mock_factory if provider == "mock" else live_factory
    modes = {}
    for template in template_modes:
        name = "with_template" if template else "without_template"
        modes[name] = [bench_mission(f, make(f), repeats, template, price_in, price_out) for f in files]
    return BenchmarkResult(repeats, modes)
