"""F_s-functionals on the space s of rapidly decreasing sequences."""

from .errors import FsError
from .functional import (
    CoefficientFamily,
    ConditionReport,
    FsFunctional,
    condition_report,
    data_envelope,
    directional,
    evaluate,
    grad,
    select_modes,
    tail_bound,
)
from .generators import ParamSequence
from .minimizer import Certificate, SolveReport, certify, minimize, minimize_adaptive, newton_path
from .problems import PROBLEMS, ProblemInstance, build, reproduce
from .ps import PsReport, check_ps_sequence, invariance_check
from .sequences import (
    CompactEnvelope,
    DecayTable,
    TemperedGradient,
    TruncatedSequence,
    decay_fit,
    dual_seminorm_t,
    seminorm_s,
)
from .terms import ConvexTermFamily, derivative_bound_check, scalar_minimize, solve_shifted_root
from .transforms import (
    BasisMap,
    chebyshev_analyze,
    chebyshev_synthesize,
    dab_analyze,
    fourier_pack,
    fourier_unpack,
    hermite_analyze,
    hermite_eval,
    pullback,
    sine_synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "FsError",
    "CoefficientFamily",
    "ConditionReport",
    "FsFunctional",
    "condition_report",
    "data_envelope",
    "directional",
    "evaluate",
    "grad",
    "select_modes",
    "tail_bound",
    "ParamSequence",
    "Certificate",
    "SolveReport",
    "certify",
    "minimize",
    "minimize_adaptive",
    "newton_path",
    "PROBLEMS",
    "ProblemInstance",
    "build",
    "reproduce",
    "PsReport",
    "check_ps_sequence",
    "invariance_check",
    "CompactEnvelope",
    "DecayTable",
    "TemperedGradient",
    "TruncatedSequence",
    "decay_fit",
    "dual_seminorm_t",
    "seminorm_s",
    "ConvexTermFamily",
    "derivative_bound_check",
    "scalar_minimize",
    "solve_shifted_root",
    "BasisMap",
    "chebyshev_analyze",
    "chebyshev_synthesize",
    "dab_analyze",
    "fourier_pack",
    "fourier_unpack",
    "hermite_analyze",
    "hermite_eval",
    "pullback",
    "sine_synthesize",
]
