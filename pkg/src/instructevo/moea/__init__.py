"""NSGA-II machinery.

The sorting/crowding kernels come from a compiled extension when available;
a pure-Python twin with identical semantics is used otherwise. Set
INSTRUCTEVO_PURE_KERNELS=1 to force the pure path.
"""

import os

from . import _pure

if os.environ.get("INSTRUCTEVO_PURE_KERNELS") == "1":
    KERNEL_BACKEND = "pure"
    fast_nondominated_sort = _pure.fast_nondominated_sort
    crowding_distance = _pure.crowding_distance
else:
    try:
        from . import _kernels

        KERNEL_BACKEND = "compiled"
        fast_nondominated_sort = _kernels.fast_nondominated_sort
        crowding_distance = _kernels.crowding_distance
    except ImportError:
        KERNEL_BACKEND = "pure"
        fast_nondominated_sort = _pure.fast_nondominated_sort
        crowding_distance = _pure.crowding_distance

from .core import (  # noqa: E402
    Fronts,
    SelectionOutcome,
    environmental_select,
    diversity_inject,
)

__all__ = [
    "KERNEL_BACKEND",
    "fast_nondominated_sort",
    "crowding_distance",
    "Fronts",
    "SelectionOutcome",
    "environmental_select",
    "diversity_inject",
]
