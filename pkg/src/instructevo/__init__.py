"""Evolves natural-language task instructions with NSGA-II.

Instructions (a task definition plus an example block) are varied by
LLM-simulated mutation/crossover operators and selected against three
minimized objectives: the reciprocal of the evaluation metric sum, character
length, and perplexity.
"""

from .archive import Archive, hypervolume, reference_point
from .model import (
    Individual,
    Instruction,
    ObjectiveVector,
    TaskExample,
    dominates,
    render,
)
from .moea import KERNEL_BACKEND, crowding_distance, environmental_select, fast_nondominated_sort
from .runner import RunConfig, run

__version__ = "0.1.0"

__all__ = [
    "Archive",
    "hypervolume",
    "reference_point",
    "Individual",
    "Instruction",
    "ObjectiveVector",
    "TaskExample",
    "dominates",
    "render",
    "KERNEL_BACKEND",
    "crowding_distance",
    "environmental_select",
    "fast_nondominated_sort",
    "RunConfig",
    "run",
]
