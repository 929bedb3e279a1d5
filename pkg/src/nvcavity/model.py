"""Physical parameters, laser/cavity geometry, and intensity-to-rate conversion.

Everything downstream (the rate matrix, the observables, the sweeps) consumes
the plain SI quantities defined here. Config-file units (mW, nm, ppm) are
converted at the CLI boundary, never inside the physics.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import scipy.constants

__all__ = [
    "PhysicalConstants",
    "NVParameters",
    "LaserDrive",
    "CavityGeometry",
    "DrivingRates",
    "CODATA",
    "GREEN_WAVELENGTH",
    "RED_WAVELENGTH",
    "default_parameters",
    "default_geometry",
    "intensity",
    "driving_rates",
    "validate",
    "ppm_to_density",
    "density_to_ppm",
]

# The two optical channels of the model. Pump and seed wavelengths are fixed
# by the level scheme, not user-configurable.
GREEN_WAVELENGTH = 532e-9
RED_WAVELENGTH = 721e-9

# 1 ppm of substitutional defects in diamond, anchored to the calibration
# pair 1.7 ppm <-> 3e17 cm^-3.
DENSITY_PER_PPM = 3e23 / 1.7  # m^-3


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants used in the photon-energy conversions (SI)."""

    planck_constant: float
    light_speed: float

    def photon_energy(self, wavelength: float) -> float:
        return self.planck_constant * self.light_speed / wavelength


CODATA = PhysicalConstants(
    planck_constant=scipy.constants.h,
    light_speed=scipy.constants.c,
)


@dataclass(frozen=True)
class NVParameters:
    """Rate constants and cross-sections of the seven-level charge-state model.

    Levels 1..5 belong to the negative charge state (ground spin pair,
    excited spin pair, singlet), levels 6..7 to the neutral one. All rates
    are s^-1, all cross-sections m^2.

    Attributes
    ----------
    r31, r42 : float
        Radiative decay of the excited spin states (equal by symmetry).
    r35, r45 : float
        Intersystem crossing into the singlet.
    r51, r52 : float
        Singlet decay into the two ground spin states.
    r76 : float
        Excited-state decay of the neutral charge state.
    sigma_g, sigma_r : float
        Ground-state absorption at the green pump and red seed wavelengths.
    sigma_se : float
        Stimulated-emission cross-section at the seed wavelength.
    sigma_I_g, sigma_I_r : float
        Excited-state ionization by green / red.
    sigma_I_s : float
        Singlet ionization by red.
    sigma_R_g, sigma_R_r : float
        Recombination (neutral back to negative) by green / red.
    xi : float
        Neutral-to-negative ratio of green absorption cross-sections.
    eta : float
        Neutral-to-negative ratio of stimulated-emission cross-sections.
    beta : float
        Neutral-to-negative ratio of spontaneous emission rates.
    rho_nv : float
        NV density, m^-3.
    sample_length : float
        Gain-medium thickness traversed by the cavity mode, m.
    """

    r31: float
    r42: float
    r35: float
    r45: float
    r51: float
    r52: float
    r76: float
    sigma_g: float
    sigma_r: float
    sigma_se: float
    sigma_I_g: float
    sigma_I_r: float
    sigma_I_s: float
    sigma_R_g: float
    sigma_R_r: float
    xi: float
    eta: float
    beta: float
    rho_nv: float
    sample_length: float

    def with_overrides(self, **kwargs) -> "NVParameters":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class LaserDrive:
    """One input beam: vacuum wavelength (m) and power at the fibre input (W)."""

    wavelength: float
    input_power: float


@dataclass(frozen=True)
class CavityGeometry:
    """Flat-top mode geometry and the two power-to-intracavity conversions.

    spot_radius is the uniform-cylinder radius standing in for the Gaussian
    spot. field_enhancement_F is the resonant intracavity/input power ratio
    for the red seed (finesse/pi). green_transmission is the fraction of
    green input power reaching the medium (the pump is not resonant).
    """

    spot_radius: float = 5e-6
    field_enhancement_F: float = 1200.0
    green_transmission: float = 0.6

    @property
    def mode_area(self) -> float:
        import math

        return math.pi * self.spot_radius**2


@dataclass(frozen=True)
class DrivingRates:
    """Per-centre transition rates (s^-1) induced by the two intensities.

    Each field is intensity * cross-section / photon-energy for one arrow of
    the level scheme.
    """

    k_pump_g: float
    k_pump_r: float
    k_stim: float
    k_ion_g: float
    k_ion_r: float
    k_ion_s: float
    k_rec_g: float
    k_rec_r: float
    k_pump_nv0: float
    k_stim_nv0: float


def default_parameters() -> NVParameters:
    """Reference parameter set of the seven-level model.

    Ratio-defined entries (ionization/recombination cross-sections, r76,
    beta) are expanded from their base values here so every field is a plain
    number downstream.
    """
    r31 = 63.93e6
    sigma_g = 3.1e-21
    sigma_se = 3.22e-21
    r76 = 0.74 * r31
    return NVParameters(
        r31=r31,
        r42=r31,
        r35=7.93e6,
        r45=53.25e6,
        r51=0.98e6,
        r52=0.72e6,
        r76=r76,
        sigma_g=sigma_g,
        sigma_r=3e-24,
        sigma_se=sigma_se,
        sigma_I_g=0.037 * sigma_g,
        sigma_I_r=0.071 * sigma_se,
        sigma_I_s=0.0215 * sigma_se,
        sigma_R_g=0.08 * sigma_g,
        sigma_R_r=0.22 * sigma_se,
        xi=1.3,
        eta=1.0 / 3.0,
        beta=r76 / r31,
        rho_nv=3e23,
        sample_length=50e-6,
    )


def default_geometry() -> CavityGeometry:
    return CavityGeometry()


def intensity(drive: LaserDrive, geom: CavityGeometry, channel: str) -> float:
    """On-sample intensity (W/m^2) of one beam under the flat-top approximation.

    The red seed is resonant and enhanced by F; the green pump just transmits
    through the input mirror. Both spread over the same mode cylinder.
    """
    if channel == "red":
        if not 0.6e-6 <= drive.wavelength <= 0.9e-6:
            raise ValueError("red channel expects a wavelength near 721 nm")
        scale = geom.field_enhancement_F
    elif channel == "green":
        if not 0.4e-6 <= drive.wavelength < 0.6e-6:
            raise ValueError("green channel expects a wavelength near 532 nm")
        scale = geom.green_transmission
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return scale * drive.input_power / geom.mode_area


def driving_rates(
    params: NVParameters,
    i_green: float,
    i_red: float,
    constants: PhysicalConstants = CODATA,
) -> DrivingRates:
    """Convert the two intensities into the per-centre rates of the level scheme."""
    if i_green < 0 or i_red < 0:
        raise ValueError("intensities must be non-negative")
    phi_g = i_green / constants.photon_energy(GREEN_WAVELENGTH)  # photons / m^2 s
    phi_r = i_red / constants.photon_energy(RED_WAVELENGTH)
    return DrivingRates(
        k_pump_g=phi_g * params.sigma_g,
        k_pump_r=phi_r * params.sigma_r,
        k_stim=phi_r * params.sigma_se,
        k_ion_g=phi_g * params.sigma_I_g,
        k_ion_r=phi_r * params.sigma_I_r,
        k_ion_s=phi_r * params.sigma_I_s,
        k_rec_g=phi_g * params.sigma_R_g,
        k_rec_r=phi_r * params.sigma_R_r,
        k_pump_nv0=phi_g * params.xi * params.sigma_g,
        k_stim_nv0=phi_r * params.eta * params.sigma_se,
    )


_RATE_FIELDS = ("r31", "r42", "r35", "r45", "r51", "r52", "r76")
_SIGMA_FIELDS = (
    "sigma_g",
    "sigma_r",
    "sigma_se",
    "sigma_I_g",
    "sigma_I_r",
    "sigma_I_s",
    "sigma_R_g",
    "sigma_R_r",
)


def validate(params: NVParameters) -> list[str]:
    """Collect every invariant violation; an empty list means the set is usable."""
    problems = []
    for name in _RATE_FIELDS:
        if getattr(params, name) < 0:
            problems.append(f"negative rate {name}")
    for name in _SIGMA_FIELDS:
        if getattr(params, name) < 0:
            problems.append(f"negative cross-section {name}")
    # zero ratios are legal (they switch a channel off), negative ones are not
    if params.xi < 0:
        problems.append("negative absorption ratio xi")
    if not 0.0 <= params.eta <= 1.0:
        problems.append("eta outside [0, 1]")
    if params.beta < 0:
        problems.append("negative emission ratio beta")
    if params.rho_nv <= 0:
        problems.append("non-positive NV density")
    if params.sample_length <= 0:
        problems.append("non-positive sample length")
    return problems


def ppm_to_density(ppm: float) -> float:
    return ppm * DENSITY_PER_PPM


def density_to_ppm(rho: float) -> float:
    return rho / DENSITY_PER_PPM
