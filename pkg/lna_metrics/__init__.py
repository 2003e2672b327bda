from .compression import (
    DEFAULT_FIT_WINDOW,
    EXPANSION_FLAG_DB,
    P1dbResult,
    PowerSweep,
    SlopeMode,
    extract_p1db,
)
from .flatness import BandSpec, ComplianceResult, Relation, band_compliance, gain_at, gain_flatness, peak_gain
from .repeatability import RepeatabilityResult, repeatability_ci
