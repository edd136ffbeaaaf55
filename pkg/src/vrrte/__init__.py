"""Polarized radiative transfer and radiative equilibrium in a stratified
column with a refractive-index discontinuity handled by interface jump
conditions."""

from .characteristics import (COMPOSED, SNELL, CharacteristicFrame,
                              TransmissionTable, transmission)
from .config import ConfigError, ScenarioConfig, from_preset
from .fresnel import (critical_cosine, g_matrix, d_matrix, gamma_matrix,
                      interface_operators, refracted_cosine)
from .grids import AltitudeGrid
from .kernels import KernelTables
from .medium import (AbsorptionTable, AlbedoParams, DensityProfile, Medium,
                     RefractiveProfile)
from .oracle import OrdinateSet, analytic_absorption, sweep_reference
from .solver import (BoundaryData, MomentField, SourceField, TransportModel,
                     build_sources, equilibrium_residual, run_source_iteration,
                     temperature_update, update_moments)
from .spectral import (KELVIN_PER_UNIT, FrequencyGrid, invert_planck_mean,
                       kelvin_to_rescaled, planck, planck_mean,
                       rescaled_to_celsius, rescaled_to_kelvin)

__version__ = "0.1.0"
