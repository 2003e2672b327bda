from .loss_tables import DEFAULT_BEFORE_FRACTION, LossTables, build_loss_tables
from .pipeline import (
    NoiseExtraction,
    ReceiverCalibration,
    calibrate_receiver,
    chain_noise_temperature,
    extract_noise_temperature,
)
from .yfactor import (
    DEFAULT_T_OFF_K,
    EnrTable,
    InputModel,
    YFactorMeasurement,
    YFactorResult,
    dut_noise_temperature,
    hot_temperature,
    input_noise_temperature,
    lumped_input_temperature,
    noise_figure_from_temperature,
    second_stage_correction,
    y_factor,
)
