"""Command-line entry points: init | run | eval | report | serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .aog_io import load as load_aog
from .aog_io import save as save_aog
from .costs import CostModel
from .engine import EngineConfig, run_learning_loop
from .learning import MiningConfig
from .ledger import EventLog
from .metrics import evaluate
from .oracle import SimulatedOracle
from .report import curve_rows, read_curve_csv, write_curve_csv, write_curve_plots, write_eval_report
from .world import WorldConfig, generate_world, save_world

log = logging.getLogger("aogqa")


def load_config(path: str | Path) -> tuple[WorldConfig, EngineConfig]:
    doc = json.loads(Path(path).read_text())
    world_cfg = WorldConfig.from_dict(doc.get("world", {}))
    engine_doc = dict(doc.get("engine", {}))
    cost = CostModel.from_dict(engine_doc.pop("cost", {}))
    mining = MiningConfig(**engine_doc.pop("mining", {}))
    engine_cfg = EngineConfig(cost=cost, mining=mining, **engine_doc)
    return world_cfg, engine_cfg


def _apply_overrides(args, world_cfg: WorldConfig, engine_cfg: EngineConfig) -> None:
    if args.seed is not None:
        world_cfg.seed = args.seed
        engine_cfg.seed = args.seed
    if getattr(args, "iterations", None) is not None:
        engine_cfg.iterations = args.iterations
    if getattr(args, "oracle_error", None) is not None:
        world_cfg.oracle_error = args.oracle_error


def cmd_init(args) -> int:
    world_cfg, _ = load_config(args.config)
    _apply_overrides(args, world_cfg, EngineConfig())
    world = generate_world(world_cfg)
    out = Path(args.out) / "world"
    save_world(world, out)
    n_scenes = sum(len(p) for p in world.pools.values()) + sum(len(p) for p in world.probes.values())
    print(f"world written to {out} ({len(world.categories)} categories, {n_scenes} scenes)")
    return 0


def cmd_run(args) -> int:
    world_cfg, engine_cfg = load_config(args.config)
    _apply_overrides(args, world_cfg, engine_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.live:
        return _run_live(args.live, world_cfg, engine_cfg, out)
    world = generate_world(world_cfg)
    oracle = SimulatedOracle(world, error_rate=world_cfg.oracle_error, seed=world_cfg.seed)
    event_log = EventLog(out / "events.jsonl")
    result = run_learning_loop(world, engine_cfg, oracle, event_log)
    save_aog(result.aog, out / "model.json")
    (out / "ledger.json").write_text(json.dumps(result.ledger.snapshot(), indent=2, sort_keys=True))
    write_curve_csv(curve_rows(result.curve), out / "curve.csv")
    final = result.curve[-1] if result.curve else None
    if final is not None:
        print(
            f"run complete: {len(result.ledger.records)} storylines, "
            f"cost={result.ledger.cumulative_cost:.2f}, "
            f"APP={final.app:.3f}, AER={final.aer:.3f}"
        )
    print(f"artifacts in {out}")
    return 0


def _run_live(base_url: str, world_cfg: WorldConfig, engine_cfg: EngineConfig, out: Path) -> int:
    """Create a live session on a running service and watch it progress."""
    import httpx

    with httpx.Client(base_url=base_url, timeout=30.0) as client:
        resp = client.post(
            "/sessions",
            json={
                "mode": "live",
                "world": world_cfg.to_dict(),
                "engine": engine_cfg.to_dict(),
            },
        )
        resp.raise_for_status()
        session_id = resp.json()["session_id"]
        print(f"live session {session_id} created; answer questions in the annotator UI")
        done = False
        while not done:
            state = client.get(f"/sessions/{session_id}/state")
            state.raise_for_status()
            body = state.json()
            done = body["finished"]
            print(
                f"  storylines={len(body['ledger']['records'])} "
                f"cost={body['ledger']['cumulative_cost']:.2f} pending={body['pending_question']}"
            )
            if not done:
                time.sleep(2.0)
        (out / "session-state.json").write_text(json.dumps(body, indent=2, sort_keys=True))
        print(f"session finished; state written to {out / 'session-state.json'}")
    return 0


def cmd_eval(args) -> int:
    world_cfg, engine_cfg = load_config(args.config)
    _apply_overrides(args, world_cfg, engine_cfg)
    out = Path(args.out)
    model_path = out / "model.json"
    if not model_path.exists():
        print(f"no model at {model_path}; run the learner first", file=sys.stderr)
        return 2
    world = generate_world(world_cfg)
    aog = load_aog(model_path)
    scenes = [s for cat in world.categories for s in world.probes[cat]]
    report = evaluate(aog, scenes, budget=engine_cfg.eval_budget)
    write_eval_report(report, out / "eval.json")
    print(report.summary())
    for name, rate in report.per_type.items():
        print(f"  {name}: {rate:.3f}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    curve_path = out / "curve.csv"
    if not curve_path.exists():
        print(f"no learning curve at {curve_path}; run the learner first", file=sys.stderr)
        return 2
    rows = read_curve_csv(curve_path)
    plots = write_curve_plots(rows, out / "plots")
    print(f"{len(rows)} storyline rows; plots: " + ", ".join(str(p) for p in plots))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app()
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aogqa",
        description="Part-graph learner with a cost-aware question-answer loop",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config path")
    common.add_argument("--seed", type=int, default=None, help="override world and loop seeds")
    common.add_argument("--out", default="out", help="artifact directory")

    p = sub.add_parser("init", parents=[common], help="materialize a world archive")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", parents=[common], help="run the learning loop")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--oracle-error", type=float, default=None, dest="oracle_error")
    p.add_argument("--live", default=None, metavar="URL", help="drive a live session on this service")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", parents=[common], help="score a trained model on held-out scenes")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render learning curves from a finished run")
    p.add_argument("--out", default="out", help="artifact directory of the finished run")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the question-answer session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
