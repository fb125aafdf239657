"""Data-driven output regulation from finite input/state data.

Given measurements of an unknown endosystem driven by a known exosystem,
the package decides whether the data are informative for regulator
design and, when they are, synthesizes feedback gains that endo-stabilize
and regulate every system compatible with the data.
"""

__version__ = "0.1.0"

from .analysis import (
    AntiStabilityError,
    ClassicalRegulator,
    RegulationCheck,
    SingularOperatorError,
    SpectralInfo,
    assemble_gains,
    check_output_regulated,
    solve_classical_regulator,
    solve_sylvester,
    spectral_info,
)
from .lmi import (
    LmiProblem,
    LmiSolution,
    ThetaCheck,
    block_matrix,
    check_theta,
    solve_lmi,
)
from .model import (
    CompatibleSet,
    CompatibleSetUnknownA3,
    DimensionError,
    InconsistentDataError,
    KnownMatrices,
    NonFiniteError,
    Problem,
    ProblemData,
    Regulator,
    SynthesisReport,
    build_problem,
    compatible_set,
    compatible_set_unknown_a3,
    member_at,
    member_at_unknown_a3,
)
from .simulation import (
    DecayResult,
    Trajectory,
    TrueSystem,
    closed_loop_sim,
    decay_check,
    generate_data,
    horizon_for_radius,
    sample_members,
    sample_members_unknown_a3,
)
from .synthesis import (
    ConditionOutcome,
    EndoStabilization,
    SynthesisConfig,
    SynthesisResult,
    VerificationReport,
    check_condition1,
    check_condition2,
    check_endo_stabilization,
    synthesize,
    synthesize_unknown_a3,
    verify_regulator,
    verify_regulator_unknown_a3,
    w_residual,
    w_system,
    w_system_unknown_a3,
)

__all__ = [
    "__version__",
    "AntiStabilityError",
    "ClassicalRegulator",
    "CompatibleSet",
    "CompatibleSetUnknownA3",
    "ConditionOutcome",
    "DecayResult",
    "DimensionError",
    "EndoStabilization",
    "InconsistentDataError",
    "KnownMatrices",
    "LmiProblem",
    "LmiSolution",
    "NonFiniteError",
    "Problem",
    "ProblemData",
    "RegulationCheck",
    "Regulator",
    "SingularOperatorError",
    "SpectralInfo",
    "SynthesisConfig",
    "SynthesisReport",
    "SynthesisResult",
    "ThetaCheck",
    "Trajectory",
    "TrueSystem",
    "VerificationReport",
    "assemble_gains",
    "block_matrix",
    "build_problem",
    "check_condition1",
    "check_condition2",
    "check_endo_stabilization",
    "check_output_regulated",
    "check_theta",
    "closed_loop_sim",
    "compatible_set",
    "compatible_set_unknown_a3",
    "decay_check",
    "generate_data",
    "horizon_for_radius",
    "member_at",
    "member_at_unknown_a3",
    "sample_members",
    "sample_members_unknown_a3",
    "solve_classical_regulator",
    "solve_lmi",
    "solve_sylvester",
    "spectral_info",
    "synthesize",
    "synthesize_unknown_a3",
    "verify_regulator",
    "verify_regulator_unknown_a3",
    "w_residual",
    "w_system",
    "w_system_unknown_a3",
]
