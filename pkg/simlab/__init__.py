from .amplifier import hard_limiter_p1db, output_power_dbm, rapp_op1db_dbm
from .expectations import ReferenceExpectations, operating_point, reference_expectations
from .fixture import cable_network, cable_thermal_spec, line_standard, path_loss_db, thru_standard, vna_error_boxes
from .instruments import (
    SaPath,
    SourceState,
    Standard,
    SwitchState,
    VirtualTestbed,
    virtual_power_sweep,
    virtual_sa_measure,
    virtual_vna_measure,
)
from .scenario import (
    SCHEMA_VERSION,
    CablePathConfig,
    CableSectionConfig,
    CompressionConfig,
    CompressionKind,
    DutModel,
    Scenario,
    SweepConfig,
    TestbedConfig,
    interpolate_knots,
    list_presets,
    load_preset,
    load_scenario,
)
