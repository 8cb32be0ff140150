# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled non-dominated sorting and crowding kernels.

Semantics are identical to _pure.py (the pure-Python twin); the O(n^2 * m)
pairwise dominance loop is the part worth compiling.
"""

from cpython cimport array
import array


cdef inline int _dominates_flat(double[:] a, Py_ssize_t p, Py_ssize_t q, Py_ssize_t m) nogil:
    cdef Py_ssize_t k
    cdef int strictly = 0
    cdef double x, y
    for k in range(m):
        x = a[p * m + k]
        y = a[q * m + k]
        if x > y:
            return 0
        if x < y:
            strictly = 1
    return strictly


def fast_nondominated_sort(objectives):
    """Partition indices into fronts (front 0 = non-dominated set)."""
    cdef Py_ssize_t n = len(objectives)
    if n == 0:
        return []
    cdef Py_ssize_t m = len(objectives[0])
    cdef array.array flat = array.array('d', [v for row in objectives for v in row])
    cdef double[:] a = flat
    cdef array.array counts = array.array('l', [0] * n)
    cdef long[:] domination_count = counts
    cdef Py_ssize_t p, q
    dominated_by = [[] for _ in range(n)]
    for p in range(n):
        for q in range(p + 1, n):
            if _dominates_flat(a, p, q, m):
                dominated_by[p].append(q)
                domination_count[q] += 1
            elif _dominates_flat(a, q, p, m):
                dominated_by[q].append(p)
                domination_count[p] += 1
    fronts = [[]]
    for p in range(n):
        if domination_count[p] == 0:
            fronts[0].append(p)
    cdef Py_ssize_t i = 0
    while fronts[i]:
        nxt = []
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


def crowding_distance(front_objs):
    """Crowding distance of a mutually non-dominated front."""
    cdef Py_ssize_t n = len(front_objs)
    if n == 0:
        return []
    if n <= 2:
        return [float("inf")] * n
    cdef Py_ssize_t m = len(front_objs[0])
    cdef Py_ssize_t k, j
    inf = float("inf")
    dist = [0.0] * n
    for k in range(m):
        col = [front_objs[i][k] for i in range(n)]
        order = sorted(range(n), key=col.__getitem__)
        lo = front_objs[order[0]][k]
        hi = front_objs[order[n - 1]][k]
        dist[order[0]] = inf
        dist[order[n - 1]] = inf
        span = hi - lo
        if span == 0.0:
            continue
        for j in range(1, n - 1):
            i2 = order[j]
            if dist[i2] != inf:
                dist[i2] += (front_objs[order[j + 1]][k] - front_objs[order[j - 1]][k]) / span
    return dist
