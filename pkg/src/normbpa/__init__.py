"""Branching bisimilarity checking for normed BPA via decomposition bases."""

from .base import DecompositionBase, b_equal, base_equal, dcmp, rd_of_process, validate_base
from .norms import semantic_norm, strong_norm, weak_norm, witness_path
from .oracle import oracle_decide
from .refine import EngineConfig, compute_fixpoint, construct_new_base, decide, initial_base
from .relative import qualify, r_blocks, r_normal_form, r_transitions
from .system import BpaSystem, format_system, is_ground, parse_system, step, validate_normed

__all__ = [
    "BpaSystem",
    "DecompositionBase",
    "EngineConfig",
    "b_equal",
    "base_equal",
    "compute_fixpoint",
    "construct_new_base",
    "dcmp",
    "decide",
    "format_system",
    "initial_base",
    "is_ground",
    "oracle_decide",
    "parse_system",
    "qualify",
    "r_blocks",
    "r_normal_form",
    "r_transitions",
    "rd_of_process",
    "semantic_norm",
    "step",
    "strong_norm",
    "validate_base",
    "validate_normed",
    "weak_norm",
    "witness_path",
]
