"""Pure-Python non-dominated sorting and crowding kernels.

Reference implementation; the compiled extension in _kernels.pyx must produce
bit-identical output on the same input.
"""

from __future__ import annotations

from typing import Sequence

Vector = Sequence[float]


def _dominates(a: Vector, b: Vector) -> bool:
    no_worse = True
    strictly = False
    for x, y in zip(a, b):
        if x > y:
            no_worse = False
            break
        if x < y:
            strictly = True
    return no_worse and strictly


def fast_nondominated_sort(objectives: Sequence[Vector]) -> list[list[int]]:
    """Partition indices into fronts (front 0 = non-dominated set).

    Fronts and the indices within each front are in ascending index order,
    so the result is a deterministic function of the input alone.
    """
    n = len(objectives)
    if n == 0:
        return []
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(p + 1, n):
            if _dominates(objectives[p], objectives[q]):
                dominated_by[p].append(q)
                domination_count[q] += 1
            elif _dominates(objectives[q], objectives[p]):
                dominated_by[q].append(p)
                domination_count[p] += 1
    for p in range(n):
        if domination_count[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt: list[int] = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    nxt.append(q)
        nxt.sort()
        fronts.append(nxt)
        i += 1
    fronts.pop()
    return fronts


def crowding_distance(front_objs: Sequence[Vector]) -> list[float]:
    """Crowding distance of a mutually non-dominated front.

    Boundary individuals on any objective get +inf; interior ones get the sum
    over objectives of (next - prev) / (max - min). Objectives with max == min
    contribute nothing.
    """
    n = len(front_objs)
    if n == 0:
        return []
    if n <= 2:
        return [float("inf")] * n
    m = len(front_objs[0])
    dist = [0.0] * n
    for k in range(m):
        order = sorted(range(n), key=lambda i: front_objs[i][k])
        lo = front_objs[order[0]][k]
        hi = front_objs[order[-1]][k]
        dist[order[0]] = float("inf")
        dist[order[-1]] = float("inf")
        span = hi - lo
        if span == 0.0:
            continue
        for j in range(1, n - 1):
            i = order[j]
            if dist[i] != float("inf"):
                dist[i] += (front_objs[order[j + 1]][k] - front_objs[order[j - 1]][k]) / span
    return dist
