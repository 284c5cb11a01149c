"""Topological classification of linear flows t -> exp(tA) x.

The pipeline: exact or float matrices (numkit) feed spectral extraction
(spectral), whose descriptors collapse to conjugacy signatures and
frequency invariants (invariants); simulation, boundedness probes, and
limit-witness sequences (flowsim) cross-check the structural answers;
the flowclass command line (cli) batches all of it.
"""

from .errors import (
    DiagnosticError,
    ExactModeError,
    FlowClassError,
    InconsistentInvariantsError,
    InputError,
    NonConvergenceError,
)
from .flowsim import (
    FactorialSystem,
    OrbitSample,
    PeriodResult,
    ProbeResult,
    WitnessSequence,
    bounded_exact,
    bounded_probe,
    extrapolate_to_zero,
    jordan_flow,
    min_period,
    orbit_point,
    orbit_sample,
    realize_blocks,
    realize_class,
    witness_sequence,
)
from .invariants import (
    BoundedStructure,
    ConjugacySignature,
    FrequencyProfile,
    RationalClass,
    ReductionLevel,
    Verdict,
    block_counts_from_reduction,
    bounded_structure,
    conjugacy_signature,
    decide_conjugate,
    decide_equivalent,
    frequency_profile,
    frequency_values,
    orbit_frequency,
    preimage_dim,
    rational_classes,
    recover_multipliers,
    reduction_dimensions,
    x_reduce,
    y_reduce,
    z_reduce,
)
from .numkit import (
    Matrix,
    Poly,
    RationalComplex,
    char_poly,
    mat_exp,
    mat_exp_array,
    power_rank_sequence,
    rank,
)
from .spectral import (
    Block,
    SpectralSplit,
    SpectrumDescriptor,
    eigenvalues,
    jordan_counts,
    spectrum_descriptor,
    split_dims,
)

__version__ = "0.1.0"

__all__ = [
    "FlowClassError",
    "InputError",
    "DiagnosticError",
    "NonConvergenceError",
    "ExactModeError",
    "InconsistentInvariantsError",
    "Matrix",
    "RationalComplex",
    "Poly",
    "rank",
    "char_poly",
    "mat_exp",
    "mat_exp_array",
    "power_rank_sequence",
    "Block",
    "SpectrumDescriptor",
    "SpectralSplit",
    "eigenvalues",
    "split_dims",
    "jordan_counts",
    "spectrum_descriptor",
    "ConjugacySignature",
    "Verdict",
    "conjugacy_signature",
    "decide_conjugate",
    "decide_equivalent",
    "BoundedStructure",
    "bounded_structure",
    "RationalClass",
    "rational_classes",
    "frequency_values",
    "orbit_frequency",
    "preimage_dim",
    "FrequencyProfile",
    "frequency_profile",
    "recover_multipliers",
    "ReductionLevel",
    "reduction_dimensions",
    "block_counts_from_reduction",
    "x_reduce",
    "y_reduce",
    "z_reduce",
    "OrbitSample",
    "orbit_point",
    "orbit_sample",
    "jordan_flow",
    "realize_blocks",
    "realize_class",
    "ProbeResult",
    "bounded_exact",
    "bounded_probe",
    "PeriodResult",
    "min_period",
    "FactorialSystem",
    "WitnessSequence",
    "witness_sequence",
    "extrapolate_to_zero",
    "__version__",
]
