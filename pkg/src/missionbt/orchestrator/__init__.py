"""Provider-facing pipeline: prompts, validation/repair loops, transcripts, accounting."""

from missionbt.orchestrator.provider import (
    LiveProvider,
    Playbook,
    Provider,
    ProviderError,
    ScriptedProvider,
    Usage,
    estimate_tokens,
)
from missionbt.orchestrator.stages import (
    DependencyAnalysis,
    StageFailure,
    build_tree,
    extract_tasks,
    gen_mission_finish,
    gen_plan,
    run_stage,
    select_ready,
    standardize_prompt,
    update_dependencies,
)
from missionbt.orchestrator.transcript import Accounting, Transcript, TranscriptRecord, account

__all__ = [
    "LiveProvider", "Playbook", "Provider", "ProviderError", "ScriptedProvider", "Usage", "estimate_tokens",
    "DependencyAnalysis", "StageFailure", "build_tree", "extract_tasks", "gen_mission_finish", "gen_plan",
    "run_stage", "select_ready", "standardize_prompt", "update_dependencies",
    "Accounting", "Transcript", "TranscriptRecord", "account",
]
