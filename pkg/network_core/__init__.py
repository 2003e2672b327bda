from .errors import (
    DegenerateCalibrationError,
    DomainError,
    GridMismatchError,
    MaterialRangeError,
    ParseError,
    SingularNetworkError,
    TouchstoneParseError,
    TraceParseError,
    UnsupportedParameterError,
)
from .network import (
    FrequencyGrid,
    ScalarTrace,
    TwoPortNetwork,
    attenuator,
    cascade,
    ideal_thru,
    matched_line,
    s_to_t,
    t_to_s,
)
from .touchstone import format_touchstone, parse_touchstone, read_touchstone, write_touchstone
from .traces import (
    format_trace_csv,
    parse_trace_csv,
    read_power_sweep_csv,
    read_trace_csv,
    write_power_sweep_csv,
    write_trace_csv,
)
from .units import (
    BOLTZMANN,
    T0_KELVIN,
    DbKind,
    dbm_to_watts,
    Unit,
    from_db,
    gamma_from_vswr,
    noise_density_dbm_per_hz,
    return_loss_db,
    to_db,
    vswr_from_gamma,
    watts_to_dbm,
)
