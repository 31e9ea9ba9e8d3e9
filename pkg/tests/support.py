"""Shortcuts for running dataset missions against their scripted playbooks."""

from __future__ import annotations

from pathlib import Path

from missionbt.bench import dataset_root
from missionbt.engine import MissionReport, run_mission
from missionbt.missionspec import MissionSpec, load_mission_file
from missionbt.orchestrator import Playbook, ScriptedProvider
from missionbt.sim import SimConfig

MISSION_IDS = ["A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3"]


def mission(mission_id: str) -> MissionSpec:
    return load_mission_file(dataset_root() / "missions" / f"{mission_id}.json")


def playbook_file(mission_id: str, variant: str = "") -> Path:
    suffix = f".{variant}" if variant else ""
    return dataset_root() / "playbooks" / f"{mission_id}{suffix}.yaml"


def playbook(mission_id: str, variant: str = "") -> Playbook:
    return Playbook.load(playbook_file(mission_id, variant))


def run(mission_id: str, variant: str = "", config: SimConfig | None = None) -> tuple[MissionReport, ScriptedProvider]:
    provider = ScriptedProvider(playbook(mission_id, variant))
    report = run_mission(mission(mission_id), provider, config, use_template=variant != "raw")
    return report, provider
