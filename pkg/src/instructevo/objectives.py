"""Objective evaluation: performance, length, perplexity, and the cache.

Performance comes from a pluggable task evaluator. The bundled scripted
evaluator is a keyword-coverage oracle: a simulated model answers a task
example correctly exactly when the instruction mentions that example's
keyword, which makes the whole loop deterministic and instantly computable.
A remote evaluator speaking a small JSON protocol can stand in for real
model-based evaluation.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from .model import Instruction, ObjectiveVector, TaskExample

DEGENERATE_SENTINEL = 1e6


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MetricBundle:
    accuracy: float
    f1: float
    precision: float
    recall: float

    def __post_init__(self):
        for name in ("accuracy", "f1", "precision", "recall"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def total(self) -> float:
        return self.accuracy + self.f1 + self.precision + self.recall


@dataclass(frozen=True)
class EvalSplitPolicy:
    prefer: str = "validation"

    def choose(self, available: frozenset[str]) -> str:
        if self.prefer in available:
            return self.prefer
        if "test" in available:
            return "test"
        raise EvaluationError(f"no usable split among {sorted(available)}")


def macro_prf(gold: list[str], predicted: list[str], labels: list[str]) -> tuple[float, float, float]:
    """Macro-averaged precision/recall/f1; empty denominators count as 0."""
    precisions, recalls, f1s = [], [], []
    for label in labels:
        tp = sum(1 for g, p in zip(gold, predicted) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold, predicted) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold, predicted) if g == label and p != label)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(f1)
    n = len(labels)
    return sum(precisions) / n, sum(recalls) / n, sum(f1s) / n


class KeywordOracleEvaluator:
    """Scripted stand-in for model-based evaluation.

    Each bundled task example carries a keyword. The simulated model predicts
    the gold label when the instruction's rendered text contains that keyword
    (whole word, case-insensitive) and the flipped label otherwise.
    """

    def __init__(self, dataset: Optional[dict] = None):
        if dataset is None:
            raw = (resources.files("instructevo.data") / "keyword_task.json").read_text(
                encoding="utf-8"
            )
            dataset = json.loads(raw)
        self.task_name = dataset["task_name"]
        self.labels = list(dataset["labels"])
        self.examples = [
            (TaskExample(e["input"], e["output"]), e["keyword"]) for e in dataset["examples"]
        ]
        self.available_splits = frozenset({"test"})

    @classmethod
    def from_file(cls, path: str | Path) -> "KeywordOracleEvaluator":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def _flip(self, label: str) -> str:
        others = [l for l in self.labels if l != label]
        return others[0] if others else label

    def evaluate(self, rendered_instruction: str, split: str) -> MetricBundle:
        words = set(re.findall(r"[a-z]+", rendered_instruction.lower()))
        gold, predicted = [], []
        for example, keyword in self.examples:
            gold.append(example.output)
            predicted.append(example.output if keyword in words else self._flip(example.output))
        correct = sum(1 for g, p in zip(gold, predicted) if g == p)
        precision, recall, f1 = macro_prf(gold, predicted, self.labels)
        return MetricBundle(
            accuracy=correct / len(gold), f1=f1, precision=precision, recall=recall
        )


class RemoteEvaluator:
    """POSTs {"instruction": ..., "split": ...} and reads a metric bundle."""

    def __init__(self, endpoint: str, splits: frozenset[str] = frozenset({"validation", "test"}),
                 timeout: float = 120.0, session=None):
        import requests

        self.endpoint = endpoint
        self.available_splits = splits
        self.timeout = timeout
        self.session = session or requests.Session()

    def evaluate(self, rendered_instruction: str, split: str) -> MetricBundle:
        try:
            resp = self.session.post(
                self.endpoint,
                json={"instruction": rendered_instruction, "split": split},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            data = resp.json()
        except Exception as exc:
            raise EvaluationError(f"remote evaluator unreachable: {exc}") from exc
        try:
            return MetricBundle(
                accuracy=float(data["accuracy"]),
                f1=float(data["f1"]),
                precision=float(data["precision"]),
                recall=float(data["recall"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EvaluationError(f"malformed evaluator response: {exc}") from exc


def eval_performance(
    instr: Instruction,
    evaluator,
    split: EvalSplitPolicy = EvalSplitPolicy(),
    sentinel: float = DEGENERATE_SENTINEL,
    warn: Optional[Callable[[str], None]] = None,
) -> float:
    """Reciprocal of the metric sum over the chosen split."""
    chosen = split.choose(evaluator.available_splits)
    bundle = evaluator.evaluate(instr.render(), chosen)
    total = bundle.total()
    if total == 0.0:
        if warn is not None:
            warn(f"degenerate evaluation (metric sum 0) for instruction {instr.id}")
        return sentinel
    return 1.0 / total


def eval_length(instr: Instruction) -> int:
    """Unicode code point count of the rendered instruction."""
    return len(instr.render())


def eval_perplexity(instr: Instruction, scorer) -> float:
    rendered = instr.render()
    if not rendered:
        return 1.0
    return scorer.perplexity(rendered)


def cache_key(rendered_text: str) -> str:
    return hashlib.sha256(rendered_text.encode("utf-8")).hexdigest()


class ObjectiveCache:
    """Memoization keyed by rendered instruction text.

    Optionally persisted as an append-only JSONL file so a resumed run serves
    identical vectors without touching any backend.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self._store: dict[str, ObjectiveVector] = {}
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                self._store[record["key"]] = ObjectiveVector.from_dict(record["vector"])

    def get(self, rendered_text: str) -> Optional[ObjectiveVector]:
        found = self._store.get(cache_key(rendered_text))
        if found is not None:
            self.hits += 1
        return found

    def put(self, rendered_text: str, vector: ObjectiveVector) -> None:
        key = cache_key(rendered_text)
        if key in self._store:
            return
        self.misses += 1
        self._store[key] = vector
        if self.path is not None:
            record = {"key": key, "vector": vector.to_dict(), "created": time.time()}
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def __len__(self) -> int:
        return len(self._store)


def evaluate(
    instr: Instruction,
    cache: Optional[ObjectiveCache],
    evaluator,
    scorer,
    split: EvalSplitPolicy = EvalSplitPolicy(),
    warn: Optional[Callable[[str], None]] = None,
) -> ObjectiveVector:
    """Compute (performance, length, perplexity), memoized on rendered text."""
    rendered = instr.render()
    if cache is not None:
        hit = cache.get(rendered)
        if hit is not None:
            return hit
    vector = ObjectiveVector(
        performance=eval_performance(instr, evaluator, split, warn=warn),
        length=eval_length(instr),
        perplexity=eval_perplexity(instr, scorer),
    )
    if cache is not None:
        cache.put(rendered, vector)
    return vector
