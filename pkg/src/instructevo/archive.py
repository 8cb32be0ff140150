"""Run-lifetime archive of evaluated individuals plus hypervolume.

The archive deduplicates by rendered instruction text and only grows; its
non-dominated subset is the reported Pareto front.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .model import Individual, dominates
from .moea import fast_nondominated_sort


class Archive:
    def __init__(self):
        self._by_text: dict[str, Individual] = {}

    def add(self, ind: Individual) -> bool:
        """Insert an evaluated individual; returns False for duplicates."""
        if ind.objectives is None:
            raise ValueError("only evaluated individuals enter the archive")
        text = ind.instruction.render()
        if text in self._by_text:
            return False
        self._by_text[text] = ind.cleared()
        return True

    def extend(self, individuals: Iterable[Individual]) -> None:
        for ind in individuals:
            self.add(ind)

    @property
    def entries(self) -> list[Individual]:
        return list(self._by_text.values())

    @property
    def frontier(self) -> list[Individual]:
        entries = self.entries
        if not entries:
            return []
        fronts = fast_nondominated_sort([e.objectives.as_tuple() for e in entries])
        return [entries[i] for i in fronts[0]]

    def frontier_is_consistent(self) -> bool:
        front = self.frontier
        return not any(
            dominates(a.objectives, b.objectives) for a in front for b in front if a is not b
        )

    def __len__(self) -> int:
        return len(self._by_text)

    def to_records(self) -> list[dict]:
        return [ind.to_dict() for ind in self.entries]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "Archive":
        archive = cls()
        for record in records:
            archive.add(Individual.from_dict(record))
        return archive


def reference_point(points: Sequence[Sequence[float]], margin: float = 1.0) -> tuple[float, ...]:
    """Componentwise max over points, plus a margin on every axis."""
    if not points:
        raise ValueError("reference point needs at least one point")
    dims = len(points[0])
    return tuple(max(p[k] for p in points) + margin for k in range(dims))


def _hv2d(points: list[tuple[float, float]], ref: tuple[float, float]) -> float:
    pts = sorted(p for p in points if p[0] < ref[0] and p[1] < ref[1])
    area = 0.0
    prev_z = ref[1]
    best_z = ref[1]
    for y, z in pts:
        if z >= best_z:
            continue  # dominated by an earlier (smaller-y) point
        area += (ref[0] - y) * (best_z - z)
        best_z = z
    return area


def hypervolume(points: Sequence[Sequence[float]], ref: Sequence[float]) -> float:
    """Dominated hypervolume (minimization) for 2 or 3 objectives.

    Computed by sweeping the first objective and accumulating 2D slabs; fine
    for the archive sizes this engine produces.
    """
    ref = tuple(ref)
    pts = [tuple(p) for p in points if all(x < r for x, r in zip(p, ref))]
    if not pts:
        return 0.0
    if len(ref) == 2:
        return _hv2d([(p[0], p[1]) for p in pts], (ref[0], ref[1]))
    if len(ref) != 3:
        raise ValueError("hypervolume supports 2 or 3 objectives")
    pts.sort()
    volume = 0.0
    for i, p in enumerate(pts):
        x_next = pts[i + 1][0] if i + 1 < len(pts) else ref[0]
        width = x_next - p[0]
        if width <= 0.0:
            continue
        slab = _hv2d([(q[1], q[2]) for q in pts[: i + 1]], (ref[1], ref[2]))
        volume += width * slab
    return volume
