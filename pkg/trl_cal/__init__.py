from .error_model import ErrorModel, ill_conditioned_mask, line_phase_deg
from .solver import (
    DEFAULT_VERIFY_TOLERANCE_DB,
    ReflectKind,
    TrlStandardsMeasurement,
    VerificationResult,
    deembed,
    solve_trl,
    verify_cal,
)
