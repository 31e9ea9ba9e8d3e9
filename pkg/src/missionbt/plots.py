"""Static figures from a trace: trajectories over regions, coverage over time."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle as CirclePatch, Polygon as PolygonPatch  # noqa: E402

REGION_COLORS = {"forbidden": "tab:red", "target": "tab:green", "plain": "tab:gray"}


def _tracks(ticks: list[dict], key: str) -> dict[int, list[tuple[float, float]]]:
    out: dict[int, list[tuple[float, float]]] = {}
    for rec in ticks:
        for eid, x, y in rec[key]:
            out.setdefault(eid, []).append((x, y))
    return out


def plot_trace(trace: list[dict], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = trace[0]
    ticks = [r for r in trace if r.get("kind") == "tick"]
    world = header["world"]

    fig, ax = plt.subplots(figsize=(7, 6))
    for g in world.get("regions", []):
        color = REGION_COLORS.get(g.get("kind", "plain"), "tab:gray")
        if "circle" in g:
            patch = CirclePatch(g["circle"]["center"], g["circle"]["radius"], alpha=0.25, color=color)
        else:
            patch = PolygonPatch(g["polygon"], closed=True, alpha=0.25, color=color)
        ax.add_patch(patch)
    starts = {r["id"]: r["position"] for r in world["robots"]}
    for rid, pts in _tracks(ticks, "robots").items():
        xs, ys = zip(*([tuple(starts[rid])] + pts))
        ax.plot(xs, ys, "-", lw=1.5, label=f"robot {rid}")
        ax.plot(xs[0], ys[0], "o", color=ax.lines[-1].get_color())
    ostarts = {o["id"]: o["position"] for o in world.get("objects", [])}
    for oid, pts in _tracks(ticks, "objects").items():
        xs, ys = zip(*([tuple(ostarts[oid])] + pts))
        ax.plot(xs, ys, "--", lw=1.0, color="k", alpha=0.6)
        ax.plot(xs[-1], ys[-1], "s", color="k", ms=4)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"mission {header.get('mission_id', '')}")
    ax.legend(loc="best", fontsize="small")
    paths = [out / "trajectories.png"]
    fig.savefig(paths[0], dpi=120, bbox_inches="tight")
    plt.close(fig)

    if any(rec.get("coverage") for rec in ticks):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        series: dict[int, list[float]] = {}
        for rec in ticks:
            for gid, frac in rec["coverage"]:
                series.setdefault(gid, []).append(frac)
        times = [rec["time"] for rec in ticks]
        for gid, fracs in series.items():
            ax.plot(times, fracs, label=f"region {gid}")
        ax.set_xlabel("time [s]")
        ax.set_ylabel("coverage")
        ax.set_ylim(0, 1.02)
        ax.legend(loc="best", fontsize="small")
        paths.append(out / "coverage.png")
        fig.savefig(paths[1], dpi=120, bbox_inches="tight")
        plt.close(fig)
    return paths
