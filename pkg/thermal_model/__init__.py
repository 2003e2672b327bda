from .cable import (
    DEFAULT_ELEMENTS_PER_SECTION,
    CableSection,
    CableThermalSpec,
    LossWeighting,
    Referred,
    ThermalProfile,
    build_profile,
    distribute_loss,
    effective_temperature,
    fit_lumped_temperature,
    integrated_cable_noise,
    t_loss,
    temperature_at,
    temperature_profile,
)
from .materials import BUNDLED_MATERIALS, MaterialProperties, load_material, read_material_csv
