"""Treedoc sequence CRDT bindings."""

from ._treedoc import (
    Document,
    Site,
    TreedocError,
    World,
    canonical_height,
    compare_ids,
    dir_bits,
    normalize_id,
    run_fuzz,
    run_scenario,
)

__all__ = [
    "Document",
    "Site",
    "TreedocError",
    "World",
    "canonical_height",
    "compare_ids",
    "dir_bits",
    "normalize_id",
    "run_fuzz",
    "run_scenario",
]
