"""Sequential near-uniform sampling of simple directed graphs."""

from .degrees import (
    DegreeSequence,
    is_digraphical,
    parse_degree_sequence,
    realize_via_flow,
    serialize_degree_sequence,
)
from .graph import Digraph
from .sampler import (
    BACKEND,
    SampleOutcome,
    run_with_retries,
    sample_fast,
    sample_reference,
    step_probability,
)

__all__ = [
    "BACKEND",
    "DegreeSequence",
    "Digraph",
    "SampleOutcome",
    "is_digraphical",
    "parse_degree_sequence",
    "realize_via_flow",
    "run_with_retries",
    "sample_fast",
    "sample_reference",
    "serialize_degree_sequence",
    "step_probability",
]
