from .graph import (
    Phase2GatingError,
    QualificationError,
    QualificationRunner,
    QualificationState,
    RunOptions,
    run_phase1,
    run_phase2,
)
from .limits import LimitOutcome, Phase1Tolerances, SpecLimits, Verdict, load_limit_set
from .memory import RecordExistsError, RunStore
from .records import CalibrationSummary, RunRecord, TraceRecord, content_hash, derive_run_id
from .report import ReportFormat, format_markdown, render_report
