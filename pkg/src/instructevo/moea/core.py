"""Environmental selection and Pareto-front diversity injection."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from ..model import Individual, Instruction, ObjectiveVector, dominates

# set up by the package __init__ before this module is imported
from . import crowding_distance, fast_nondominated_sort


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class Fronts:
    """Non-domination partition: fronts[0] is the non-dominated set."""

    fronts: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(objectives: Sequence[ObjectiveVector]) -> "Fronts":
        raw = fast_nondominated_sort([o.as_tuple() for o in objectives])
        return Fronts(tuple(tuple(f) for f in raw))


@dataclass(frozen=True)
class SelectionOutcome:
    survivors: tuple[Individual, ...]
    truncated_front_index: Optional[int]


def environmental_select(combined: Sequence[Individual], m: int) -> SelectionOutcome:
    """Keep the best m of the combined parent+offspring pool.

    Whole fronts are taken in rank order; the first front that does not fit is
    sorted by crowding distance descending (ties by original index) and
    truncated. Survivors carry their rank and crowding distance.
    """
    if m < 1:
        raise SelectionError(f"population size must be >= 1, got {m}")
    if len(combined) < m:
        raise SelectionError(f"combined population {len(combined)} smaller than M={m}")
    for ind in combined:
        if ind.objectives is None:
            raise SelectionError(f"individual {ind.instruction.id} not evaluated")

    vectors = [ind.objectives.as_tuple() for ind in combined]
    fronts = fast_nondominated_sort(vectors)
    survivors: list[Individual] = []
    truncated_front_index: Optional[int] = None
    for rank, front in enumerate(fronts):
        crowd = crowding_distance([vectors[i] for i in front])
        ranked = [
            combined[i].with_selection_state(rank, crowd[j])
            for j, i in enumerate(front)
        ]
        if len(survivors) + len(front) <= m:
            survivors.extend(ranked)
            if len(survivors) == m:
                break
        else:
            need = m - len(survivors)
            # stable sort keeps original index order on crowding ties
            ranked.sort(key=lambda ind: -ind.crowding)
            survivors.extend(ranked[:need])
            truncated_front_index = rank
            break
    return SelectionOutcome(tuple(survivors), truncated_front_index)


def diversity_inject(
    pop: Sequence[Individual],
    rate: float,
    generator: Callable[[], Optional[Instruction]],
    rng: random.Random,
    generation: int = 0,
    warn: Optional[Callable[[str], None]] = None,
) -> list[Individual]:
    """Replace floor(rate * |front0|) random front-0 members with fresh,
    unevaluated instructions from the generator.

    Requires rank fields from a prior selection. If the generator runs dry,
    fewer are replaced and a warning is emitted.
    """
    if not 0.0 <= rate <= 1.0:
        raise SelectionError(f"injection rate must be in [0, 1], got {rate}")
    out = list(pop)
    front0 = [i for i, ind in enumerate(out) if ind.rank == 0]
    n_replace = math.floor(rate * len(front0))
    if n_replace == 0:
        return out
    chosen = sorted(rng.sample(front0, n_replace))
    for idx in chosen:
        fresh = generator()
        if fresh is None:
            if warn is not None:
                warn(f"instruction generator exhausted; replaced {chosen.index(idx)} of {n_replace}")
            break
        out[idx] = Individual(instruction=fresh, generation_born=generation)
    return out


def no_discarded_dominates_survivor(
    combined: Sequence[Individual], survivors: Sequence[Individual]
) -> bool:
    """Selection soundness check used by tests and debug assertions."""
    survivor_ids = {ind.instruction.id for ind in survivors}
    discarded = [ind for ind in combined if ind.instruction.id not in survivor_ids]
    for d in discarded:
        for s in survivors:
            if dominates(d.objectives, s.objectives):
                return False
    return True
