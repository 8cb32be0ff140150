"""Core value types: instructions, objective vectors, individuals.

All types are immutable value objects so they can be shared freely between
workers. Individuals serialize to single-line JSON records for run logs and
checkpoints.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence


class RecordParseError(ValueError):
    """Raised when a serialized record is malformed; names the bad field."""

    def __init__(self, field_name: str, reason: str):
        self.field_name = field_name
        self.reason = reason
        super().__init__(f"bad field {field_name!r}: {reason}")


# sequential ids keep runs reproducible (and logs byte-identical) under a
# fixed seed; the runner resets/restores the counter at run and resume time
_id_counter = itertools.count()


def new_id() -> str:
    return f"i{next(_id_counter):08d}"


def reset_ids(start: int = 0) -> None:
    global _id_counter
    _id_counter = itertools.count(start)


def next_id_value() -> int:
    """Peek the next counter value without consuming it (for checkpoints)."""
    global _id_counter
    value = next(_id_counter)
    _id_counter = itertools.count(value)
    return value


@dataclass(frozen=True)
class LineageRecord:
    """How an instruction came to be: operator kind plus parent ids."""

    operator: str
    parent_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"operator": self.operator, "parent_ids": list(self.parent_ids)}

    @staticmethod
    def from_dict(d: dict) -> "LineageRecord":
        return LineageRecord(str(d["operator"]), tuple(str(p) for p in d["parent_ids"]))


@dataclass(frozen=True)
class Instruction:
    """An evolvable instruction: a task definition plus an example block.

    The rendered form is the definition followed by a newline and the example
    block; an empty example contributes no separator.
    """

    definition: str
    example: str = ""
    id: str = field(default_factory=new_id)
    lineage: tuple[LineageRecord, ...] = ()

    def __post_init__(self):
        if not self.definition.strip():
            raise ValueError("instruction definition must be non-empty")

    def render(self) -> str:
        if self.example:
            return self.definition + "\n" + self.example
        return self.definition

    def with_definition(self, definition: str, lineage: LineageRecord) -> "Instruction":
        return Instruction(
            definition=definition,
            example=self.example,
            id=new_id(),
            lineage=self.lineage + (lineage,),
        )

    def with_example(self, example: str, lineage: LineageRecord) -> "Instruction":
        return Instruction(
            definition=self.definition,
            example=example,
            id=new_id(),
            lineage=self.lineage + (lineage,),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "definition": self.definition,
            "example": self.example,
            "lineage": [rec.to_dict() for rec in self.lineage],
        }

    @staticmethod
    def from_dict(d: dict) -> "Instruction":
        try:
            definition = d["definition"]
        except KeyError:
            raise RecordParseError("definition", "missing") from None
        if not isinstance(definition, str) or not definition.strip():
            raise RecordParseError("definition", "must be non-empty text")
        try:
            return Instruction(
                definition=definition,
                example=str(d.get("example", "")),
                id=str(d.get("id") or new_id()),
                lineage=tuple(LineageRecord.from_dict(r) for r in d.get("lineage", [])),
            )
        except (KeyError, TypeError) as exc:
            raise RecordParseError("lineage", str(exc)) from None


def render(instr: Instruction) -> str:
    return instr.render()


@dataclass(frozen=True)
class ObjectiveVector:
    """Fitness triple, all components minimized.

    performance: reciprocal of the evaluation metric sum
    length: character (Unicode code point) count of the rendered instruction
    perplexity: sequence-scorer perplexity of the rendered instruction
    """

    performance: float
    length: int
    perplexity: float

    def __post_init__(self):
        for name in ("performance", "perplexity"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.performance < 0:
            raise ValueError("performance must be non-negative")
        if self.length < 0:
            raise ValueError("length must be non-negative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.performance, float(self.length), self.perplexity)

    def to_dict(self) -> dict:
        return {
            "performance": self.performance,
            "length": self.length,
            "perplexity": self.perplexity,
        }

    @staticmethod
    def from_dict(d: dict) -> "ObjectiveVector":
        for name in ("performance", "length", "perplexity"):
            if name not in d:
                raise RecordParseError(name, "missing")
            try:
                v = float(d[name])
            except (TypeError, ValueError):
                raise RecordParseError(name, f"not a number: {d[name]!r}") from None
            if not math.isfinite(v):
                raise RecordParseError(name, f"must be finite, got {d[name]!r}")
        return ObjectiveVector(
            performance=float(d["performance"]),
            length=int(d["length"]),
            perplexity=float(d["perplexity"]),
        )


def dominates(a: ObjectiveVector | Sequence[float], b: ObjectiveVector | Sequence[float]) -> bool:
    """Pareto dominance under minimization: a is no worse everywhere and
    strictly better somewhere."""
    ta = a.as_tuple() if isinstance(a, ObjectiveVector) else tuple(a)
    tb = b.as_tuple() if isinstance(b, ObjectiveVector) else tuple(b)
    no_worse = all(x <= y for x, y in zip(ta, tb))
    strictly = any(x < y for x, y in zip(ta, tb))
    return no_worse and strictly


@dataclass(frozen=True)
class Individual:
    """An instruction plus its evaluation state within a run."""

    instruction: Instruction
    objectives: Optional[ObjectiveVector] = None
    generation_born: int = 0
    rank: Optional[int] = None
    crowding: Optional[float] = None

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None

    def with_objectives(self, objectives: ObjectiveVector) -> "Individual":
        return replace(self, objectives=objectives)

    def with_selection_state(self, rank: int, crowding: float) -> "Individual":
        return replace(self, rank=rank, crowding=crowding)

    def cleared(self) -> "Individual":
        """Drop rank/crowding (valid only within one selection step)."""
        return replace(self, rank=None, crowding=None)

    def to_dict(self) -> dict:
        crowding = self.crowding
        if crowding is not None and math.isinf(crowding):
            crowding = "inf"
        return {
            "instruction": self.instruction.to_dict(),
            "objectives": self.objectives.to_dict() if self.objectives else None,
            "generation_born": self.generation_born,
            "rank": self.rank,
            "crowding": crowding,
        }

    @staticmethod
    def from_dict(d: dict) -> "Individual":
        if "instruction" not in d:
            raise RecordParseError("instruction", "missing")
        if "objectives" not in d:
            raise RecordParseError("objectives", "missing")
        objectives = d["objectives"]
        crowding = d.get("crowding")
        if crowding == "inf":
            crowding = math.inf
        elif crowding is not None:
            crowding = float(crowding)
        return Individual(
            instruction=Instruction.from_dict(d["instruction"]),
            objectives=ObjectiveVector.from_dict(objectives) if objectives is not None else None,
            generation_born=int(d.get("generation_born", 0)),
            rank=None if d.get("rank") is None else int(d["rank"]),
            crowding=crowding,
        )


def serialize_individual(ind: Individual) -> str:
    """One-line JSON record for run logs; inverse of deserialize_individual."""
    return json.dumps(ind.to_dict(), ensure_ascii=False, sort_keys=True)


def deserialize_individual(record: str) -> Individual:
    try:
        d = json.loads(record)
    except json.JSONDecodeError as exc:
        raise RecordParseError("<record>", f"invalid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise RecordParseError("<record>", "expected a JSON object")
    return Individual.from_dict(d)


@dataclass(frozen=True)
class TaskExample:
    """A single labelled task instance."""

    input: str
    output: str

    def __post_init__(self):
        if not self.input:
            raise ValueError("task example input must be non-empty")
