"""Exact symbolic tests for forward- and backward-flatness of nonlinear
discrete-time systems ``x+ = f(x, u)``.

The forward test runs a sequence of projectable distributions; the
backward test runs the same sequence on the time-mirrored associated
system built from the inverse of an extended map ``(f, g)``.
"""

__version__ = "0.1.0"

from .backtest import BackwardVerdict, TestInconclusive, backward_flatness_test, map_output_to_original
from .flatout import (
    DerivationFailed,
    FlatOutputCandidate,
    Parameterization,
    ShiftAlgebra,
    VerificationFailed,
    derive_forward_flat_output,
    first_integrals,
    shift_expr,
    verify_flat_output,
)
from .geomtest import Distribution, SequenceRecord, VectorField, forward_flatness_test, lie_bracket
from .jacrank import (
    RankReport,
    build_extended_jacobian,
    check_mirror_correspondence,
    check_rank_conditions,
    mirror_parameterization,
)
from .sysmodel import (
    InvalidSystem,
    InversionError,
    RankError,
    SystemModel,
    build_associated,
    load_system,
    validate_system,
)
from .trajcheck import Trajectory, check_correspondence, check_parameterization_roundtrip, simulate
