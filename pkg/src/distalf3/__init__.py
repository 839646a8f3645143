"""Exact SL2 generator arithmetic, Cayley-graph spectral gaps mod p, and a
skew-product F3-action on finite truncations with ergodicity and
equicontinuity diagnostics."""

__version__ = "0.1.0"

from .sl2 import IntMat2, ModMat2, Prime, canonical_generators, inverse, mul, reduce_mod
from .words import Word, evaluate, enumerate_reduced, freeness_scan, reduce
from .cayley import GroupTable, enumerate_group, generation_check, walk_operator
from .spectra import WalkOperator, cheeger_sweep, dense_spectrum, gap_scan, iterative_gap
from .dynamics import (Cocycle, SkewProductSystem, build_system, build_truncation, cyclic_closure,
                       equicontinuity_defect, extend_cocycle, koopman_gap, orbit_transitivity)

__all__ = [
    "IntMat2", "ModMat2", "Prime", "canonical_generators", "inverse", "mul", "reduce_mod",
    "Word", "evaluate", "enumerate_reduced", "freeness_scan", "reduce",
    "GroupTable", "enumerate_group", "generation_check", "walk_operator",
    "WalkOperator", "cheeger_sweep", "dense_spectrum", "gap_scan", "iterative_gap",
    "Cocycle", "SkewProductSystem", "build_system", "build_truncation", "cyclic_closure",
    "equicontinuity_defect", "extend_cocycle", "koopman_gap", "orbit_transitivity",
]
