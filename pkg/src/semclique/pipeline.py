"""Scene -> cliques -> predictions -> metrics, plus CSV emission and ablation sweeps."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .cliques import ABLATIONS, CliqueTimeline, CriteriaConfig, cliques_over_time
from .metrics import DEFAULT_MU_FLOOR, DEFAULT_STAMPS, EvalReport, evaluate
from .predictors import PredictionSet, Predictor, get_predictor
from .scene import AgentKind, AgentType, Scene

ABLATION_STAMPS = (0.5, 1.5, 2.5, 3.5)
EVAL_COLUMNS = ("scene", "row_type", "entity", "metric", "stamp_s", "value")


def fmt(value: float) -> str:
    """Fixed CSV float format: 9 significant digits, no negative zero."""
    if value == 0:
        value = 0.0
    return format(value, ".9g")


def override_d0(scene: Scene, vehicle: float | None = None, pedestrian: float | None = None) -> Scene:
    """Return ``scene`` with per-type interaction distances replaced."""
    if vehicle is None and pedestrian is None:
        return scene
    agents = []
    for a in scene.agents:
        t = a.agent_type
        new = vehicle if t.kind is AgentKind.VEHICLE else pedestrian
        if new is not None:
            a = replace(a, agent_type=AgentType(t.kind, t.footprint_radius, float(new)))
        agents.append(a)
    return replace(scene, agents=tuple(agents))


def predict_scene(scene: Scene, timeline: CliqueTimeline, predictor: Predictor, n_modes: int) -> PredictionSet:
    return PredictionSet.merge(predictor.predict(c, scene, n_modes) for c in timeline.final)


@dataclass(frozen=True)
class SceneRun:
    timeline: CliqueTimeline
    predictions: PredictionSet
    report: EvalReport
    threshold: float = 1.0

    @property
    def final_edges(self) -> int:
        return len(self.timeline.graphs[-1].edges(self.threshold))


def run_scene(
    scene: Scene,
    cfg: CriteriaConfig = CriteriaConfig(),
    predictor: str | Predictor = "cv",
    n: int = 1,
    stamps: Sequence[float] = DEFAULT_STAMPS,
    mu_floor: float = DEFAULT_MU_FLOOR,
) -> SceneRun:
    if isinstance(predictor, str):
        predictor = get_predictor(predictor)
    timeline = cliques_over_time(scene, cfg)
    preds = predict_scene(scene, timeline, predictor, n)
    report = evaluate(scene, preds, timeline.final, n, stamps, mu_floor)
    return SceneRun(timeline, preds, report, cfg.alpha_threshold)


def default_stamps(scene: Scene, stamps: Sequence[float] = DEFAULT_STAMPS) -> tuple[float, ...]:
    """Drop default stamps that fall past the scene horizon."""
    horizon = scene.horizon_steps * scene.dt
    return tuple(s for s in stamps if s <= horizon + 1e-9)


def report_rows(report: EvalReport) -> list[tuple[str, ...]]:
    sid = report.scene_id
    rows = []
    for aid in sorted(report.ade):
        rows.append((sid, "agent", aid, "ade", "", fmt(report.ade[aid])))
        for s in report.stamps:
            rows.append((sid, "agent", aid, "fde", f"{s:g}", fmt(report.fde[aid][s])))
    for cid, members in report.clique_ids.items():
        rows.append((sid, "clique", cid, "size", "", str(len(members))))
        rows.append((sid, "clique", cid, "miss_fraction", "", fmt(report.mac_per_clique[cid])))
    rows.append((sid, "scene", sid, "ade", "", fmt(report.mean_ade)))
    for s in report.stamps:
        rows.append((sid, "scene", sid, "fde", f"{s:g}", fmt(report.mean_fde(s))))
    rows.append((sid, "scene", sid, "mac_percent", "", fmt(report.mac)))
    rows.append((sid, "scene", sid, "collision_rate", "", fmt(report.collision_rate)))
    return rows


def to_csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def eval_csv(reports: Sequence[EvalReport]) -> str:
    rows = [r for rep in sorted(reports, key=lambda r: r.scene_id) for r in report_rows(rep)]
    return to_csv(EVAL_COLUMNS, rows)


def summary_text(report: EvalReport) -> str:
    lines = [f"scene {report.scene_id}: {len(report.ade)} agents, {len(report.clique_ids)} cliques, best-of-{report.n}"]
    lines.append(f"  ADE            {report.mean_ade:.3f} m")
    for s in report.stamps:
        lines.append(f"  FDE@{s:g}s{' ' * max(0, 9 - len(f'{s:g}'))}{report.mean_fde(s):.3f} m")
    lines.append(f"  mAC            {report.mac:.2f} %")
    lines.append(f"  collision rate {report.collision_rate:.4f}")
    return "\n".join(lines)


def _ablation_metrics(run: SceneRun, stamps: Sequence[float]) -> dict[tuple[str, str], float]:
    rep = run.report
    out = {("fde", f"{s:g}"): rep.mean_fde(s) for s in stamps}
    out[("ade", "")] = rep.mean_ade
    out[("mac_percent", "")] = rep.mac
    out[("collision_rate", "")] = rep.collision_rate
    out[("edges", "")] = float(run.final_edges)
    out[("cliques", "")] = float(len(run.timeline.final))
    return out


def ablation_header() -> tuple[str, ...]:
    names = list(ABLATIONS)
    return ("scene", "metric", "stamp_s", *names, *(f"delta_{n}" for n in names[1:]))


def ablate(
    scenes: Sequence[Scene],
    cfg: CriteriaConfig = CriteriaConfig(),
    predictor: str = "cv",
    n: int = 1,
    stamps: Sequence[float] = ABLATION_STAMPS,
    mu_floor: float = DEFAULT_MU_FLOOR,
    jobs: int = 1,
) -> list[tuple[str, ...]]:
    """Evaluate every scene under each criterion toggle; one row group per scene.

    With more than one scene an ``ALL`` group holds means over scenes. Deltas
    are (toggle - all_on).
    """
    if not scenes:
        raise ValueError("no scenes to ablate")
    names = list(ABLATIONS)

    def one(scene: Scene):
        table = {}
        for name in names:
            run = run_scene(scene, cfg.replace(**ABLATIONS[name]), predictor, n, stamps, mu_floor)
            table[name] = _ablation_metrics(run, stamps)
        return scene.scene_id, table

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, scenes))
    else:
        results = [one(s) for s in scenes]
    results.sort(key=lambda r: r[0])

    groups = list(results)
    if len(results) > 1:
        keys = list(results[0][1]["all_on"])
        mean = {name: {k: float(np.mean([t[name][k] for _, t in results])) for k in keys} for name in names}
        groups.append(("ALL", mean))

    rows = []
    for sid, table in groups:
        for key in table["all_on"]:
            vals = [table[name][key] for name in names]
            deltas = [v - vals[0] for v in vals[1:]]
            rows.append((sid, key[0], key[1], *(fmt(v) for v in vals), *(fmt(d) for d in deltas)))
    return rows


def ablation_csv(rows) -> str:
    return to_csv(ablation_header(), rows)


def clique_rows(timeline: CliqueTimeline) -> list[tuple[str, ...]]:
    """(timestep, clique_id, agent_id, alpha_min, alpha_max) over each agent's in-clique edges."""
    rows = []
    for g, part in zip(timeline.graphs, timeline.partitions):
        for k, c in enumerate(part):
            for aid in c.member_ids:
                w = [g.weight(aid, o) for o in c.member_ids if o != aid]
                lo, hi = (min(w), max(w)) if w else (0.0, 0.0)
                rows.append((str(g.timestep_index), f"c{k}", aid, fmt(lo), fmt(hi)))
    return rows


def clique_text(timeline: CliqueTimeline, threshold: float) -> str:
    lines = []
    for g, part in zip(timeline.graphs, timeline.partitions):
        edges = g.edges(threshold)
        lines.append(f"t={g.timestep_index} agents={len(g.agent_ids)} edges={len(edges)} cliques={len(part)}")
        for k, c in enumerate(part):
            w = [g.weight(a, b) for i, a in enumerate(c.member_ids) for b in c.member_ids[i + 1:]]
            w = [x for x in w if x > threshold]
            span = f" alpha=[{min(w):.3f}, {max(w):.3f}]" if w else ""
            lines.append(f"  c{k}: {' '.join(c.member_ids)}{span}")
    return "\n".join(lines)

