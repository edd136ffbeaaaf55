import numpy as np
import pytest

from vrrte import (AbsorptionTable, AlbedoParams, BoundaryData, DensityProfile,
                   FrequencyGrid, Medium, RefractiveProfile, TransportModel)

T_EARTH = 300.0 / 4798.0
T_SUN = 5700.0 / 4798.0


def gray_medium(epsilon: float, beta: float = 0.0, kappa_bar: float = 0.5,
                albedo: AlbedoParams | None = None, y: float = 0.5) -> Medium:
    return Medium(RefractiveProfile.from_step(epsilon, y, 1.0),
                  DensityProfile.constant(1.0),
                  AbsorptionTable.constant(kappa_bar),
                  albedo if albedo is not None else AlbedoParams(),
                  beta)


def scattering_albedo() -> AlbedoParams:
    return AlbedoParams(a1=0.7, a2=0.3, z1=0.4, z2=0.8, nu1=0.6, nu2=1.5)


def small_freq(panels: int = 4, order: int = 3) -> FrequencyGrid:
    return FrequencyGrid.build(panels=panels, order=order)


def small_model(epsilon: float = 0.0, beta: float = 0.0, n_z: int = 50,
                boundary: BoundaryData | None = None,
                levels=None, albedo: AlbedoParams | None = None,
                freq: FrequencyGrid | None = None, **kw) -> TransportModel:
    med = gray_medium(epsilon, beta=beta, albedo=albedo)
    return TransportModel.assemble(
        med, boundary if boundary is not None else BoundaryData(),
        n_z=n_z, freq=freq if freq is not None else small_freq(),
        levels=np.asarray(levels) if levels is not None else np.array([0.4, 0.5, 0.6]),
        **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
