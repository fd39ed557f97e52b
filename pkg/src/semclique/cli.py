"""Command-line entry point: ``semclique {gen,cliques,predict,eval,ablate}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import pipeline
from .cliques import CriteriaConfig, batch_active_nodes, cliques_over_time
from .metrics import DEFAULT_MU_FLOOR, DEFAULT_STAMPS
from .predictors import PREDICTORS, get_predictor
from .render import render_svg
from .sceneio import SceneFormatError, load_scene, save_scene
from .synth import GT_MODELS, KINDS, gen_scenario

USAGE_ERROR = 1
DATA_ERROR = 2

# Tunables that may come from --config; flags override. name -> (type, default)
TUNABLES = {
    "d0_vehicle": (float, None),
    "d0_pedestrian": (float, None),
    "D": (float, 5.0),
    "alpha_threshold": (float, 1.0),
    "max_clique_size": (int, 8),
    "t_samples": (int, 4),
    "lane_radius": (float, 5.0),
    "lane_depth": (int, 3),
    "mu_floor": (float, DEFAULT_MU_FLOOR),
    "K": (int, 64),
    "resolution": (float, 0.5),
    "no_distance": (bool, False),
    "no_direction": (bool, False),
    "no_barrier": (bool, False),
    "no_lane_overlap": (bool, False),
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _stamps(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid stamp list {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("stamps must be positive seconds")
    return vals


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("criteria and evaluation tunables")
    g.add_argument("--config", type=Path, help="JSON file with tunables; flags win")
    g.add_argument("--d0-vehicle", type=float, help="interaction distance for vehicles (m)")
    g.add_argument("--d0-pedestrian", type=float, help="interaction distance for pedestrians (m)")
    g.add_argument("--D", dest="D", type=float, help="direction-relevance distance (m, default 5)")
    g.add_argument("--alpha-threshold", type=float, help="edge threshold on alpha (default 1)")
    g.add_argument("--max-clique-size", type=int, help="default 8")
    g.add_argument("--t-samples", type=int, help="sampled history timesteps (default 4)")
    g.add_argument("--lane-radius", type=float, help="lane association radius (m, default 5)")
    g.add_argument("--lane-depth", type=int, help="lane reachability depth (default 3)")
    g.add_argument("--mu-floor", type=float, help="mAC speed floor (m/s, default 0.5)")
    g.add_argument("--K", dest="K", type=int, help="local map size in cells (default 64)")
    g.add_argument("--resolution", type=float, help="local map resolution (m/cell, default 0.5)")
    for crit in ("distance", "direction", "barrier", "lane-overlap"):
        g.add_argument(f"--no-{crit}", action="store_const", const=True, default=None, help=f"disable the {crit} criterion")


def _resolve(args) -> dict:
    conf = {}
    if args.config is not None:
        try:
            conf = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(conf, dict):
            raise DataError("config must be a JSON object")
        unknown = set(conf) - set(TUNABLES)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for name, (typ, default) in TUNABLES.items():
        flag = getattr(args, name, None)
        if flag is not None:
            out[name] = flag
        elif name in conf:
            try:
                out[name] = typ(conf[name])
            except (TypeError, ValueError):
                raise UsageError(f"config key {name!r} must be {typ.__name__}") from None
        else:
            out[name] = default
    return out


def _criteria(t: dict) -> CriteriaConfig:
    try:
        return CriteriaConfig(
            use_distance=not t["no_distance"],
            use_direction=not t["no_direction"],
            use_barrier=not t["no_barrier"],
            use_lane_overlap=not t["no_lane_overlap"],
            D=t["D"],
            alpha_threshold=t["alpha_threshold"],
            max_clique_size=t["max_clique_size"],
            T_samples=t["t_samples"],
            lane_radius=t["lane_radius"],
            lane_depth=t["lane_depth"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path: Path, t: dict):
    try:
        scene = load_scene(path)
    except SceneFormatError as exc:
        raise DataError(str(exc)) from None
    return pipeline.override_d0(scene, t["d0_vehicle"], t["d0_pedestrian"])


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_gen(args) -> int:
    params = {k: v for k, v in (
        ("dt", args.dt), ("horizon", args.horizon), ("history_steps", args.history_steps),
        ("gt_model", args.gt_model), ("outer_factor", args.outer_factor),
    ) if v is not None}
    if args.kind.replace("_", "-") not in KINDS:
        raise UsageError(f"unknown kind {args.kind!r}; valid kinds: {', '.join(KINDS)}")
    try:
        scene = gen_scenario(args.kind, args.seed, **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = args.out or Path(f"{scene.scene_id}.json")
    save_scene(scene, out)
    print(f"wrote {out}")
    return 0


def cmd_cliques(args) -> int:
    t = _resolve(args)
    cfg = _criteria(t)
    scene = _load(args.scene, t)
    try:
        timeline = cliques_over_time(scene, cfg)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if args.format == "csv":
        text = pipeline.to_csv(("timestep", "clique_id", "agent_id", "alpha_min", "alpha_max"), pipeline.clique_rows(timeline))
    else:
        text = pipeline.clique_text(timeline, cfg.alpha_threshold) + "\n"
    _emit(text, args.out)
    if args.batch is not None:
        batches = batch_active_nodes(scene, timeline, t["K"], t["resolution"])
        arrays = {}
        for k, b in enumerate(batches):
            arrays[f"c{k}_members"] = np.array(b.clique.member_ids)
            arrays[f"c{k}_histories"] = b.histories
            arrays[f"c{k}_local_maps"] = b.local_maps
            arrays[f"c{k}_edge_histories"] = b.edge_histories
        np.savez_compressed(args.batch, **arrays)
    if args.svg is not None:
        args.svg.write_text(render_svg(scene, timeline.final))
    return 0


def cmd_predict(args) -> int:
    t = _resolve(args)
    cfg = _criteria(t)
    scene = _load(args.scene, t)
    try:
        timeline = cliques_over_time(scene, cfg)
        preds = pipeline.predict_scene(scene, timeline, get_predictor(args.predictor), args.n)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    rows = []
    for aid, modes in preds.modes.items():
        for m, mode in enumerate(modes):
            for k, s in enumerate(mode.states, start=1):
                rows.append((aid, str(m), pipeline.fmt(mode.confidence), pipeline.fmt(k * scene.dt), pipeline.fmt(s.x), pipeline.fmt(s.y)))
    _emit(pipeline.to_csv(("agent_id", "mode", "confidence", "t_s", "x", "y"), rows), args.out)
    for aid, reason in preds.fallbacks.items():
        print(f"note: {aid} fell back to constant velocity ({reason})", file=sys.stderr)
    if args.svg is not None:
        args.svg.write_text(render_svg(scene, timeline.final, preds))
    return 0


def cmd_eval(args) -> int:
    t = _resolve(args)
    cfg = _criteria(t)
    scenes = [_load(p, t) for p in args.scenes]

    def one(scene):
        stamps = args.stamps if args.stamps is not None else pipeline.default_stamps(scene, DEFAULT_STAMPS)
        return pipeline.run_scene(scene, cfg, args.predictor, args.n, stamps, t["mu_floor"])

    try:
        if args.jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(args.jobs) as pool:
                runs = list(pool.map(one, scenes))
        else:
            runs = [one(s) for s in scenes]
    except ValueError as exc:
        raise DataError(str(exc)) from None
    reports = [r.report for r in runs]
    _emit(pipeline.eval_csv(reports), args.out)
    if args.out is not None:
        for rep in sorted(reports, key=lambda r: r.scene_id):
            print(pipeline.summary_text(rep))
    if args.svg is not None:
        if len(scenes) != 1:
            raise UsageError("--svg needs exactly one scene")
        args.svg.write_text(render_svg(scenes[0], runs[0].timeline.final, runs[0].predictions))
    return 0


def cmd_ablate(args) -> int:
    t = _resolve(args)
    cfg = _criteria(t)
    if not args.scene_dir.is_dir():
        raise DataError(f"{args.scene_dir} is not a directory")
    paths = sorted(args.scene_dir.glob("*.json"))
    if not paths:
        raise DataError(f"no scene files (*.json) in {args.scene_dir}")
    scenes = [_load(p, t) for p in paths]
    try:
        rows = pipeline.ablate(scenes, cfg, args.predictor, args.n, args.stamps, t["mu_floor"], args.jobs)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _emit(pipeline.ablation_csv(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semclique", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic scene file")
    p.add_argument("--kind", required=True, help=f"one of: {', '.join(KINDS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--history-steps", type=int)
    p.add_argument("--gt-model", choices=GT_MODELS)
    p.add_argument("--outer-factor", type=float)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cliques", help="list interaction cliques per sampled timestep")
    p.add_argument("scene", type=Path)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", type=Path)
    p.add_argument("--batch", type=Path, help="write active-node batches (histories, local maps) to .npz")
    p.add_argument("--svg", type=Path)
    _add_config_flags(p)
    p.set_defaults(func=cmd_cliques)

    for name, func, help_ in (
        ("predict", cmd_predict, "forecast every clique of a scene"),
        ("eval", cmd_eval, "forecast and score scenes against ground truth"),
        ("ablate", cmd_ablate, "score a directory of scenes under each criterion toggle"),
    ):
        p = sub.add_parser(name, help=help_)
        if name == "ablate":
            p.add_argument("scene_dir", type=Path)
        elif name == "eval":
            p.add_argument("scenes", type=Path, nargs="+")
        else:
            p.add_argument("scene", type=Path)
        p.add_argument("--predictor", choices=tuple(PREDICTORS), default="cv")
        p.add_argument("--n", type=int, default=1, help="modes per agent / Best-of-N")
        if name != "predict":
            default = pipeline.ABLATION_STAMPS if name == "ablate" else None
            p.add_argument("--stamps", type=_stamps, default=default, help="comma-separated seconds")
            p.add_argument("--jobs", type=int, default=1, help="scenes evaluated concurrently")
        p.add_argument("--out", type=Path)
        if name != "ablate":
            p.add_argument("--svg", type=Path)
        _add_config_flags(p)
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", 1) < 1:
        parser.error("--n must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"semclique: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except DataError as exc:
        print(f"semclique: data error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
