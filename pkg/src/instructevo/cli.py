"""Command-line entry point.

Subcommands: run, resume, export, eval-one, validate-config. A run is driven
by a JSON config file (see README for the schema); a few fields can be
overridden with flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .archive import Archive
from .export import export_pareto
from .model import Instruction
from .objectives import EvalSplitPolicy, ObjectiveCache, evaluate
from .runner import ConfigError, GenerationAborted, RunConfig, RunContext, latest_checkpoint, run


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "generations", None) is not None:
        overrides["generations"] = args.generations
    if getattr(args, "population", None) is not None:
        overrides["population_size"] = args.population
    if getattr(args, "no_guidance", False):
        overrides["guidance_enabled"] = False
    if getattr(args, "output_dir", None) is not None:
        overrides["output_dir"] = args.output_dir
    if getattr(args, "backend", None) is not None:
        overrides["gateway"] = replace(config.gateway, backend=args.backend)
    if overrides:
        config = replace(config, **overrides)
        config.validate()
    return config


def _add_override_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--generations", type=int, help="override the generation count")
    p.add_argument("--population", type=int, help="override the population size")
    p.add_argument("--no-guidance", action="store_true",
                   help="drop objective annotations from operator prompts (ablation)")
    p.add_argument("--backend", choices=["mock", "http"], help="override the LLM backend")
    p.add_argument("--output-dir", help="override the output directory")


def cmd_run(args) -> int:
    config = _load_config(args)
    try:
        pop, archive = run(config, resume=args.resume)
    except GenerationAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 2
    print(f"run complete: {len(pop)} individuals, archive {len(archive)}, "
          f"frontier {len(archive.frontier)}")
    print(f"outputs in {config.output_dir}")
    return 0


def cmd_resume(args) -> int:
    args.resume = True
    return cmd_run(args)


def cmd_export(args) -> int:
    ckpt = latest_checkpoint(args.output_dir)
    if ckpt is None:
        print(f"no checkpoint under {args.output_dir}", file=sys.stderr)
        return 1
    state = json.loads(ckpt.read_text(encoding="utf-8"))
    archive = Archive.from_records(state["archive"])
    written = export_pareto(archive, Path(args.output_dir) / "exports")
    for path in written:
        print(path)
    return 0


def cmd_eval_one(args) -> int:
    config = _load_config(args)
    instr = Instruction(definition=args.definition, example=args.example or "")
    ctx = RunContext(config)
    try:
        vector = evaluate(
            instr,
            ObjectiveCache(),
            ctx.evaluator,
            ctx.scorer,
            EvalSplitPolicy(prefer=config.evaluator.prefer_split),
        )
    finally:
        ctx.close()
    print(json.dumps(vector.to_dict(), indent=2))
    return 0


def cmd_validate_config(args) -> int:
    try:
        config = RunConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: M={config.population_size} N={config.generations} "
          f"backend={config.gateway.backend} fingerprint={config.fingerprint()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instructevo",
        description="Multi-objective evolutionary optimization of task instructions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a full run")
    p_run.add_argument("config", help="path to the JSON run config")
    _add_override_flags(p_run)
    p_run.add_argument("--resume", action="store_true", help="resume from the latest checkpoint")
    p_run.set_defaults(func=cmd_run)

    p_resume = sub.add_parser("resume", help="resume a run from its latest checkpoint")
    p_resume.add_argument("config", help="path to the JSON run config")
    _add_override_flags(p_resume)
    p_resume.set_defaults(func=cmd_resume)

    p_export = sub.add_parser("export", help="re-export Pareto artifacts from a checkpoint")
    p_export.add_argument("output_dir", help="run output directory containing checkpoints/")
    p_export.set_defaults(func=cmd_export)

    p_eval = sub.add_parser("eval-one", help="score a single instruction")
    p_eval.add_argument("config", help="path to the JSON run config")
    p_eval.add_argument("--definition", required=True)
    p_eval.add_argument("--example", default="")
    _add_override_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval_one)

    p_val = sub.add_parser("validate-config", help="check a run config file")
    p_val.add_argument("config", help="path to the JSON run config")
    p_val.set_defaults(func=cmd_validate_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
