"""Dual-graph calculus and obstructions for delta-constant deformations of
plane curve singularities with smooth branches."""

from .decomposition import (
    ArrangementIncidence,
    Criterion,
    DecompositionResult,
    DecompositionWitness,
    Outcome,
    SearchBudget,
    canonical_omp_decomposition,
    collide_nodes,
    construct_omp_witness,
    decompose_check,
    enumerate_decomposition_targets,
    omp_criterion,
    verify_witness,
)
from .expressions import format_expression, parse_expression
from .graph import (
    DualGraph,
    LevelTree,
    SingularityType,
    canonical_form,
    enumerate_types_with_delta,
    full_subgraph,
    make_named_type,
    subtract_graph,
    validate_dual_graph,
)
from .invariants import (
    Signature,
    Spectrum,
    basic_invariants,
    brieskorn_model,
    interval_count,
    signature_from_spectrum,
    signature_steenbrink,
    spectrum,
    tau_es,
)
from .obstructions import DeformationProblem, ObstructionReport, Status, Verdict, aggregate_verdict

__version__ = "0.1.0"

__all__ = [
    "aggregate_verdict",
    "ArrangementIncidence",
    "basic_invariants",
    "brieskorn_model",
    "canonical_form",
    "canonical_omp_decomposition",
    "collide_nodes",
    "construct_omp_witness",
    "Criterion",
    "decompose_check",
    "DecompositionResult",
    "DecompositionWitness",
    "DeformationProblem",
    "DualGraph",
    "enumerate_decomposition_targets",
    "enumerate_types_with_delta",
    "format_expression",
    "full_subgraph",
    "interval_count",
    "LevelTree",
    "make_named_type",
    "ObstructionReport",
    "omp_criterion",
    "Outcome",
    "parse_expression",
    "SearchBudget",
    "Signature",
    "signature_from_spectrum",
    "signature_steenbrink",
    "SingularityType",
    "spectrum",
    "Spectrum",
    "Status",
    "subtract_graph",
    "tau_es",
    "validate_dual_graph",
    "Verdict",
    "verify_witness",
]
