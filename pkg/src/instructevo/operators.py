"""The four LLM-simulated instruction operators.

Definition mutation/crossover rewrite the task definition and keep parent 1's
example block; example mutation/crossover do the reverse. Prompts are built
from bundled fixed templates (checksum-verified at load) plus the parent
payload, optionally annotated with each parent's objective values.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from random import Random
from typing import Callable, Optional

from .gateway import INPUT1_MARKER, INPUT2_MARKER, CompletionParams, GatewayError
from .model import Individual, Instruction, LineageRecord, ObjectiveVector


class OperatorError(RuntimeError):
    def __init__(self, kind: "OperatorKind", parent_ids: tuple[str, ...], cause: str):
        self.kind = kind
        self.parent_ids = parent_ids
        super().__init__(f"{kind.value} failed for parents {parent_ids}: {cause}")


class OperatorKind(Enum):
    DEFINITION_MUTATION = "definition_mutation"
    DEFINITION_CROSSOVER = "definition_crossover"
    EXAMPLE_MUTATION = "example_mutation"
    EXAMPLE_CROSSOVER = "example_crossover"

    @property
    def is_crossover(self) -> bool:
        return self in (OperatorKind.DEFINITION_CROSSOVER, OperatorKind.EXAMPLE_CROSSOVER)

    @property
    def edits_definition(self) -> bool:
        return self in (OperatorKind.DEFINITION_MUTATION, OperatorKind.DEFINITION_CROSSOVER)


_KINDS = tuple(OperatorKind)

# sha256 of each fixed template; guards against accidental edits of the
# bundled template file
TEMPLATE_CHECKSUMS = {
    "definition_mutation": "8cff98fba2b8956fcb68b695ceb591670198680b6a274496615d0d2f54a95621",
    "definition_crossover": "edfff3468c57f9c3c821320f10a0c5b6c45d6bc6476f7d37ded5423e7c407841",
    "example_mutation": "bb07e3a3c89b417262de8681f9e0ad57b4154c6a7b568b07145314e2056c0054",
    "example_crossover": "55b9593f2de56d4c2f8a1291744c0379180bf19058b6179430dd188166a15fff",
}

_GUIDANCE_SENTENCE_RE = re.compile(r"Given the minimization objectives[^.]*\.\s*")


class TemplateError(ValueError):
    pass


@lru_cache(maxsize=1)
def load_templates() -> dict[str, dict[str, str]]:
    raw = (resources.files("instructevo.data") / "operator_prompts.json").read_text(encoding="utf-8")
    templates = json.loads(raw)
    for kind in OperatorKind:
        entry = templates.get(kind.value)
        if entry is None:
            raise TemplateError(f"template file missing operator {kind.value}")
        digest = hashlib.sha256(entry["fixed"].encode("utf-8")).hexdigest()
        if digest != TEMPLATE_CHECKSUMS[kind.value]:
            raise TemplateError(f"fixed prompt for {kind.value} fails its checksum")
    return templates


def select_operator(rng: Random) -> OperatorKind:
    """Uniform draw over the four kinds; advances the stream by one draw."""
    return _KINDS[rng.randrange(4)]


def format_objectives(objectives: ObjectiveVector) -> str:
    """(m, l, r) with 4 significant digits per component."""
    m, l, r = objectives.as_tuple()
    return f"({m:.4g}, {l:.4g}, {r:.4g})"


@dataclass(frozen=True)
class OperatorPrompt:
    kind: OperatorKind
    fixed_text: str
    guidance_enabled: bool
    payload: str

    @property
    def text(self) -> str:
        return self.fixed_text + self.payload


def _objective_annotation(objectives: Optional[ObjectiveVector], guidance: bool) -> str:
    if not guidance or objectives is None:
        return ""
    return "\nMinimization objectives: " + format_objectives(objectives)


def build_prompt(
    kind: OperatorKind,
    parent1: tuple[Instruction, Optional[ObjectiveVector]],
    parent2: Optional[tuple[Instruction, Optional[ObjectiveVector]]],
    guidance: bool,
    task_name: str = "sentiment analysis",
) -> OperatorPrompt:
    """Assemble the full operator prompt for one variation call.

    Crossover kinds require parent2; mutation kinds ignore it. With guidance
    off the objective annotations and the guidance sentence of the fixed text
    are omitted (the ablation mode).
    """
    if kind.is_crossover and parent2 is None:
        raise ValueError(f"{kind.value} requires a second parent")
    entry = load_templates()[kind.value]
    fixed = entry["fixed"].replace("{task}", task_name)
    if not guidance:
        fixed = _GUIDANCE_SENTENCE_RE.sub("", fixed)

    def side(parent: tuple[Instruction, Optional[ObjectiveVector]]) -> str:
        instr, _ = parent
        return instr.definition if kind.edits_definition else instr.example

    slots = {
        "{parent1}": side(parent1),
        "{objectives1}": _objective_annotation(parent1[1], guidance),
        "{parent2}": side(parent2) if parent2 is not None else "",
        "{objectives2}": _objective_annotation(parent2[1], guidance) if parent2 is not None else "",
    }
    payload = entry["payload"]
    for slot, value in slots.items():
        payload = payload.replace(slot, value)
    return OperatorPrompt(kind=kind, fixed_text=fixed, guidance_enabled=guidance, payload=payload)


_FENCE_RE = re.compile(r"^```[\w-]*\s*\n(.*?)\n?```\s*$", re.DOTALL)


def parse_operator_output(raw: str) -> str:
    """Clean a completion into usable instruction text.

    Strips markdown fences and surrounding quotes, drops any line starting
    with "minimization objectives" (case-insensitive), and trims. An empty
    result signals the caller to fall back to the parent.
    """
    text = raw.strip()
    m = _FENCE_RE.match(text)
    if m:
        text = m.group(1).strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    kept = [
        line
        for line in text.splitlines()
        if not line.strip().lower().startswith("minimization objectives")
    ]
    return "\n".join(kept).strip()


def apply_operator(
    kind: OperatorKind,
    parent1: Individual,
    parent2: Optional[Individual],
    gateway,
    guidance: bool,
    task_name: str = "sentiment analysis",
    params: CompletionParams = CompletionParams(),
    warn: Optional[Callable[[str], None]] = None,
    on_prompt: Optional[Callable[[OperatorPrompt, str], None]] = None,
) -> Instruction:
    """Run one variation operator through the gateway and build the child.

    Definition operators keep parent 1's example; example operators keep
    parent 1's definition. Unusable LLM output falls back to an unmodified
    copy of parent 1.
    """
    p2 = parent2 if kind.is_crossover else None
    prompt = build_prompt(
        kind,
        (parent1.instruction, parent1.objectives),
        (p2.instruction, p2.objectives) if p2 is not None else None,
        guidance,
        task_name,
    )
    parent_ids = (parent1.instruction.id,) + (
        (p2.instruction.id,) if p2 is not None else ()
    )
    try:
        raw = gateway.complete(prompt.text, params)
    except GatewayError as exc:
        raise OperatorError(kind, parent_ids, str(exc)) from exc
    if on_prompt is not None:
        on_prompt(prompt, raw)
    text = parse_operator_output(raw)
    lineage = LineageRecord(operator=kind.value, parent_ids=parent_ids)
    if not text:
        if warn is not None:
            warn(f"{kind.value} produced empty output; copying parent {parent1.instruction.id}")
        if kind.edits_definition:
            return parent1.instruction.with_definition(parent1.instruction.definition, lineage)
        return parent1.instruction.with_example(parent1.instruction.example, lineage)
    if kind.edits_definition:
        return parent1.instruction.with_definition(text, lineage)
    return parent1.instruction.with_example(text, lineage)
