"""Run orchestration: configuration, the generation loop, checkpoints, resume.

One run executes N generations of the evolutionary loop over a population of
M instructions: per slot, pair the slot's individual with a uniformly random
mate, apply a random LLM operator, evaluate the offspring (cache-backed),
then environmental selection over the combined pool followed by Pareto-front
diversity injection. Every evaluated individual enters the archive.

All randomness flows through named, seeded streams so a fixed seed gives
byte-identical run logs under the mock backends; the log therefore carries a
sequence number instead of wall-clock timestamps.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from random import Random
from typing import Optional

from . import model
from .archive import Archive
from .gateway import CompletionParams, GatewayEvent, HttpGateway, MockGateway
from .model import Individual, Instruction
from .moea import diversity_inject, environmental_select
from .objectives import (
    EvalSplitPolicy,
    EvaluationError,
    KeywordOracleEvaluator,
    ObjectiveCache,
    RemoteEvaluator,
    evaluate,
)
from .operators import (
    OperatorError,
    OperatorKind,
    apply_operator,
    select_operator,
)
from .perplexity import CharTrigramScorer, RemoteScorer, bundled_scorer


class ConfigError(ValueError):
    pass


class GenerationAborted(RuntimeError):
    """Too many operator failures; the last checkpoint remains valid."""


@dataclass(frozen=True)
class GatewayConfig:
    backend: str = "mock"  # mock | http
    mock_mode: str = "seeded-edit"
    base_url: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    model_name: str = "gpt-3.5-turbo"
    temperature: float = 1.0
    max_tokens: int = 500
    max_retries: int = 4
    requests_per_minute: int = 60


@dataclass(frozen=True)
class EvaluatorConfig:
    kind: str = "keyword-oracle"  # keyword-oracle | remote
    dataset_path: Optional[str] = None
    endpoint: Optional[str] = None
    prefer_split: str = "validation"


@dataclass(frozen=True)
class ScorerConfig:
    kind: str = "ngram"  # ngram | remote
    corpus_path: Optional[str] = None
    endpoint: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    seed_instructions: tuple[Instruction, ...]
    output_dir: str
    population_size: int = 100
    generations: int = 10
    seed: int = 0
    guidance_enabled: bool = True
    injection_rate: float = 0.2
    task_name: str = "sentiment analysis"
    failure_fraction: float = 0.2
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)

    def validate(self) -> None:
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if not self.seed_instructions:
            raise ConfigError("at least one seed instruction is required")
        if not 0.0 <= self.injection_rate <= 1.0:
            raise ConfigError("injection_rate must be in [0, 1]")
        if not 0.0 <= self.failure_fraction <= 1.0:
            raise ConfigError("failure_fraction must be in [0, 1]")
        if self.gateway.backend not in ("mock", "http"):
            raise ConfigError(f"unknown gateway backend {self.gateway.backend!r}")
        if self.gateway.backend == "http" and not self.gateway.base_url:
            raise ConfigError("http gateway requires base_url")
        if self.evaluator.kind not in ("keyword-oracle", "remote"):
            raise ConfigError(f"unknown evaluator kind {self.evaluator.kind!r}")
        if self.evaluator.kind == "remote" and not self.evaluator.endpoint:
            raise ConfigError("remote evaluator requires endpoint")
        if self.scorer.kind not in ("ngram", "remote"):
            raise ConfigError(f"unknown scorer kind {self.scorer.kind!r}")
        if self.scorer.kind == "remote" and not self.scorer.endpoint:
            raise ConfigError("remote scorer requires endpoint")

    def to_dict(self) -> dict:
        # output_dir is deliberately omitted: it is environment, not run
        # semantics, and logs of identical runs must match byte-for-byte
        return {
            "population_size": self.population_size,
            "generations": self.generations,
            "seed": self.seed,
            "guidance_enabled": self.guidance_enabled,
            "injection_rate": self.injection_rate,
            "task_name": self.task_name,
            "failure_fraction": self.failure_fraction,
            "seed_instructions": [
                {"definition": s.definition, "example": s.example} for s in self.seed_instructions
            ],
            "gateway": vars(self.gateway).copy(),
            "evaluator": vars(self.evaluator).copy(),
            "scorer": vars(self.scorer).copy(),
        }

    def fingerprint(self) -> str:
        # generations is a stopping condition, not run semantics: a resumed
        # run may extend it without invalidating earlier checkpoints
        data = self.to_dict()
        data.pop("generations")
        return hashlib.sha256(
            json.dumps(data, sort_keys=True).encode("utf-8")
        ).hexdigest()[:16]

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        try:
            seeds = tuple(
                Instruction(definition=s["definition"], example=s.get("example", ""))
                for s in data["seed_instructions"]
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad seed_instructions: {exc}") from None
        if "output_dir" not in data:
            raise ConfigError("output_dir is required")

        def sub(cls, key):
            raw = data.get(key, {})
            known = {f for f in cls.__dataclass_fields__}
            unknown = set(raw) - known
            if unknown:
                raise ConfigError(f"unknown {key} config fields: {sorted(unknown)}")
            return cls(**raw)

        cfg = RunConfig(
            seed_instructions=seeds,
            output_dir=str(data["output_dir"]),
            population_size=int(data.get("population_size", 100)),
            generations=int(data.get("generations", 10)),
            seed=int(data.get("seed", 0)),
            guidance_enabled=bool(data.get("guidance_enabled", True)),
            injection_rate=float(data.get("injection_rate", 0.2)),
            task_name=str(data.get("task_name", "sentiment analysis")),
            failure_fraction=float(data.get("failure_fraction", 0.2)),
            gateway=sub(GatewayConfig, "gateway"),
            evaluator=sub(EvaluatorConfig, "evaluator"),
            scorer=sub(ScorerConfig, "scorer"),
        )
        cfg.validate()
        return cfg

    @staticmethod
    def from_file(path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return RunConfig.from_dict(data)


class RunLogger:
    """Append-only JSONL event log with a deterministic sequence counter."""

    def __init__(self, path: Path, seq: int = 0):
        self.path = path
        self.seq = seq
        path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = path.open("a", encoding="utf-8")

    def log(self, event: str, **fields) -> None:
        record = {"seq": self.seq, "event": event}
        record.update(fields)
        self._fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        self._fh.flush()
        self.seq += 1

    def close(self) -> None:
        self._fh.close()


def _derive_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _rng_state_to_json(rng: Random) -> list:
    version, internal, gauss = rng.getstate()
    return [version, list(internal), gauss]


def _rng_state_from_json(state: list) -> tuple:
    return (state[0], tuple(state[1]), state[2])


class SeedMutationGenerator:
    """Fresh-instruction source for initialization and diversity injection.

    Cycles the configured seed instructions, alternating definition and
    example mutation (guidance off: the seeds may be unevaluated).
    """

    def __init__(self, ctx: "RunContext"):
        self.ctx = ctx
        self.counter = 0

    def __call__(self) -> Optional[Instruction]:
        ctx = self.ctx
        base = ctx.config.seed_instructions[self.counter % len(ctx.config.seed_instructions)]
        kind = OperatorKind.DEFINITION_MUTATION
        if self.counter % 2 == 1 and base.example:
            kind = OperatorKind.EXAMPLE_MUTATION
        self.counter += 1
        try:
            return apply_operator(
                kind,
                Individual(instruction=base),
                None,
                ctx.gateway,
                guidance=False,
                task_name=ctx.config.task_name,
                params=ctx.params,
                warn=ctx.warn,
                on_prompt=ctx.log_operator_prompt(kind, (base.id,)),
            )
        except OperatorError as exc:
            ctx.warn(f"fresh-instruction generation failed: {exc}")
            return None


class RunContext:
    """Everything a run needs: backends, rng streams, log, cache, archive."""

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.logger = RunLogger(self.out / "run_log.jsonl")
        self.cache = ObjectiveCache(self.out / "cache.jsonl")
        self.archive = Archive()
        self.params = CompletionParams(
            temperature=config.gateway.temperature,
            max_tokens=config.gateway.max_tokens,
            model_name=config.gateway.model_name,
        )
        self.gateway = self._build_gateway()
        self.evaluator = self._build_evaluator()
        self.scorer = self._build_scorer()
        self.split = EvalSplitPolicy(prefer=config.evaluator.prefer_split)
        self.rng_parents = Random(_derive_seed(config.seed, "parents"))
        self.rng_operators = Random(_derive_seed(config.seed, "operators"))
        self.rng_inject = Random(_derive_seed(config.seed, "inject"))
        self.generator = SeedMutationGenerator(self)

    def _build_gateway(self):
        gw = self.config.gateway
        if gw.backend == "mock":
            return MockGateway(
                mode=gw.mock_mode,
                seed=_derive_seed(self.config.seed, "gateway"),
                on_event=self._on_gateway_event,
            )
        return HttpGateway(
            base_url=gw.base_url,
            api_key_env=gw.api_key_env,
            max_retries=gw.max_retries,
            requests_per_minute=gw.requests_per_minute,
            on_event=self._on_gateway_event,
        )

    def _build_evaluator(self):
        ev = self.config.evaluator
        if ev.kind == "keyword-oracle":
            if ev.dataset_path:
                return KeywordOracleEvaluator.from_file(ev.dataset_path)
            return KeywordOracleEvaluator()
        return RemoteEvaluator(ev.endpoint)

    def _build_scorer(self):
        sc = self.config.scorer
        if sc.kind == "ngram":
            if sc.corpus_path:
                return CharTrigramScorer(Path(sc.corpus_path).read_text(encoding="utf-8"))
            return bundled_scorer()
        return RemoteScorer(sc.endpoint)

    def _on_gateway_event(self, event: GatewayEvent):
        self.logger.log(
            "gateway",
            backend=event.backend,
            timestamp=event.timestamp,
            prompt_chars=event.prompt_chars,
            response_chars=event.response_chars,
            latency_ms=event.latency_ms,
            attempt=event.attempt,
        )

    def warn(self, message: str) -> None:
        self.logger.log("warning", message=message)

    def log_operator_prompt(self, kind: OperatorKind, parent_ids: tuple[str, ...]):
        def sink(prompt, response: str):
            self.logger.log(
                "operator_call",
                kind=kind.value,
                parent_ids=list(parent_ids),
                guidance=prompt.guidance_enabled,
                prompt=prompt.text,
                response=response,
            )

        return sink

    def ensure_evaluated(self, ind: Individual) -> Individual:
        if ind.objectives is not None:
            return ind
        rendered = ind.instruction.render()
        cached = self.cache.get(rendered) is not None
        try:
            vector = evaluate(
                ind.instruction, self.cache, self.evaluator, self.scorer, self.split, self.warn
            )
        except EvaluationError as exc:
            # re-queue once, then give up on this run
            self.warn(f"evaluation failed for {ind.instruction.id}, retrying once: {exc}")
            try:
                vector = evaluate(
                    ind.instruction, self.cache, self.evaluator, self.scorer, self.split, self.warn
                )
            except EvaluationError as exc2:
                self.logger.log(
                    "evaluation_failure", id=ind.instruction.id, error=str(exc2)
                )
                raise
        out = ind.with_objectives(vector)
        self.logger.log(
            "evaluation",
            id=ind.instruction.id,
            cache_hit=cached,
            performance=vector.performance,
            length=vector.length,
            perplexity=vector.perplexity,
        )
        self.archive.add(out)
        return out

    def close(self):
        self.logger.close()


def initialize_population(ctx: RunContext) -> list[Individual]:
    """Size-M population: the seeds verbatim, then seeded single mutations of
    cycled seeds. Truncates the seed list if it already exceeds M."""
    seeds = ctx.config.seed_instructions
    m = ctx.config.population_size
    pop = [Individual(instruction=s, generation_born=0) for s in seeds[:m]]
    while len(pop) < m:
        fresh = ctx.generator()
        if fresh is None:
            raise GenerationAborted("gateway failure while seeding the population")
        pop.append(Individual(instruction=fresh, generation_born=0))
    return pop


def run_generation(pop: list[Individual], generation: int, ctx: RunContext) -> list[Individual]:
    """One full generation; returns the next population (size M exactly)."""
    cfg = ctx.config
    m = cfg.population_size
    ctx.logger.log("generation_start", generation=generation)
    pop = [ctx.ensure_evaluated(ind) for ind in pop]
    max_failures = math.floor(cfg.failure_fraction * m)
    failures = 0
    offspring: list[Individual] = []
    for j in range(m):
        parent1 = pop[j]
        parent2 = pop[ctx.rng_parents.randrange(m)]
        kind = select_operator(ctx.rng_operators)
        parent_ids = (parent1.instruction.id,) + (
            (parent2.instruction.id,) if kind.is_crossover else ()
        )
        try:
            child_instr = apply_operator(
                kind,
                parent1,
                parent2 if kind.is_crossover else None,
                ctx.gateway,
                guidance=cfg.guidance_enabled,
                task_name=cfg.task_name,
                params=ctx.params,
                warn=ctx.warn,
                on_prompt=ctx.log_operator_prompt(kind, parent_ids),
            )
        except OperatorError as exc:
            failures += 1
            ctx.logger.log(
                "operator_failure", kind=kind.value, parent_ids=list(parent_ids), error=str(exc)
            )
            if failures > max_failures:
                raise GenerationAborted(
                    f"{failures} operator failures exceed limit {max_failures}"
                ) from exc
            continue
        child = ctx.ensure_evaluated(
            Individual(instruction=child_instr, generation_born=generation)
        )
        offspring.append(child)

    combined = pop + offspring
    outcome = environmental_select(combined, m)
    ctx.logger.log(
        "selection",
        generation=generation,
        combined_size=len(combined),
        survivor_ids=[ind.instruction.id for ind in outcome.survivors],
        truncated_front_index=outcome.truncated_front_index,
    )
    survivors = list(outcome.survivors)
    injected = diversity_inject(
        survivors,
        cfg.injection_rate,
        ctx.generator,
        ctx.rng_inject,
        generation=generation,
        warn=ctx.warn,
    )
    replaced = [
        (old.instruction.id, new.instruction.id)
        for old, new in zip(survivors, injected)
        if old.instruction.id != new.instruction.id
    ]
    ctx.logger.log("injection", generation=generation, replaced=[list(r) for r in replaced])
    ctx.logger.log("generation_end", generation=generation, archive_size=len(ctx.archive))
    return injected


def _checkpoint_path(out: Path, generation: int) -> Path:
    return out / "checkpoints" / f"gen_{generation:04d}.json"


def save_checkpoint(ctx: RunContext, generation: int, pop: list[Individual]) -> Path:
    path = _checkpoint_path(ctx.out, generation)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = {
        "generation": generation,
        "config_fingerprint": ctx.config.fingerprint(),
        "population": [ind.to_dict() for ind in pop],
        "archive": ctx.archive.to_records(),
        "rng": {
            "parents": _rng_state_to_json(ctx.rng_parents),
            "operators": _rng_state_to_json(ctx.rng_operators),
            "inject": _rng_state_to_json(ctx.rng_inject),
        },
        "generator_counter": ctx.generator.counter,
        # mock gateway output depends on its call counter; a resumed run
        # must pick it up where the interrupted one left off
        "gateway_ticks": getattr(ctx.gateway, "_ticks", 0),
        "id_counter": model.next_id_value(),
        "log_seq": ctx.logger.seq,
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(state, sort_keys=True), encoding="utf-8")
    tmp.replace(path)
    return path


def latest_checkpoint(output_dir: str | Path) -> Optional[Path]:
    ckpt_dir = Path(output_dir) / "checkpoints"
    if not ckpt_dir.is_dir():
        return None
    candidates = sorted(ckpt_dir.glob("gen_*.json"))
    return candidates[-1] if candidates else None


def _restore(ctx: RunContext, state: dict) -> tuple[int, list[Individual]]:
    if state["config_fingerprint"] != ctx.config.fingerprint():
        raise ConfigError("checkpoint belongs to a different configuration")
    # recreate the seed instructions with their original run-scoped ids so
    # lineage stays consistent across resume, then jump the counter forward
    model.reset_ids(0)
    ctx.config = replace(
        ctx.config,
        seed_instructions=tuple(
            Instruction(definition=s.definition, example=s.example)
            for s in ctx.config.seed_instructions
        ),
    )
    model.reset_ids(state["id_counter"])
    ctx.rng_parents.setstate(_rng_state_from_json(state["rng"]["parents"]))
    ctx.rng_operators.setstate(_rng_state_from_json(state["rng"]["operators"]))
    ctx.rng_inject.setstate(_rng_state_from_json(state["rng"]["inject"]))
    ctx.generator.counter = state["generator_counter"]
    if hasattr(ctx.gateway, "_ticks"):
        ctx.gateway._ticks = state.get("gateway_ticks", 0)
    ctx.logger.seq = state["log_seq"]
    ctx.archive = Archive.from_records(state["archive"])
    pop = [Individual.from_dict(d) for d in state["population"]]
    return state["generation"], pop


def run(config: RunConfig, resume: bool = False) -> tuple[list[Individual], Archive]:
    """Execute (or resume) a full run; returns final population and archive."""
    ctx = RunContext(config)
    start_generation = 1
    try:
        if resume:
            ckpt = latest_checkpoint(config.output_dir)
            if ckpt is None:
                raise ConfigError(f"--resume given but no checkpoint under {config.output_dir}")
            state = json.loads(ckpt.read_text(encoding="utf-8"))
            done, pop = _restore(ctx, state)
            start_generation = done + 1
            ctx.logger.log("resume", generation=done, checkpoint=ckpt.name)
        else:
            model.reset_ids(0)
            # seed instructions get their run-scoped ids here
            config = replace(
                config,
                seed_instructions=tuple(
                    Instruction(definition=s.definition, example=s.example)
                    for s in config.seed_instructions
                ),
            )
            ctx.config = config
            ctx.logger.log("run_start", config=config.to_dict(), fingerprint=config.fingerprint())
            pop = initialize_population(ctx)
            save_checkpoint(ctx, 0, pop)

        for generation in range(start_generation, config.generations + 1):
            pop = run_generation(pop, generation, ctx)
            save_checkpoint(ctx, generation, pop)

        # injection after the last generation can leave unevaluated members
        pop = [ctx.ensure_evaluated(ind) for ind in pop]
        from .export import export_pareto

        export_pareto(ctx.archive, ctx.out / "exports")
        ctx.logger.log(
            "run_end",
            generations=config.generations,
            archive_size=len(ctx.archive),
            frontier_size=len(ctx.archive.frontier),
        )
        return pop, ctx.archive
    finally:
        ctx.close()
