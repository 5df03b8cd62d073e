"""All-or-nothing multicommodity flow: fractional solvers and rounding."""

from anf.model import (
    Commodity,
    Edge,
    FractionalSolution,
    Instance,
    PackingSolution,
    RoundedSolution,
    compact_to_packing,
    packing_to_compact,
    prune_unroutable,
    validate,
)

__all__ = [
    "Commodity",
    "Edge",
    "FractionalSolution",
    "Instance",
    "PackingSolution",
    "RoundedSolution",
    "compact_to_packing",
    "packing_to_compact",
    "prune_unroutable",
    "validate",
]
