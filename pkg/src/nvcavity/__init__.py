"""Seven-level charge-state photokinetics of NV centres in a fibre cavity.

The package models one gain medium driven by a green pump and a resonant red
seed: steady-state and time-resolved level populations, the cavity
amplification and spontaneous-emission observables built from them, emission
spectroscopy (Lorentzian peak fits and the emission-rate to cross-section
integral), parameter sweeps, and a small config-driven CLI.
"""
__version__ = "0.1.0"

from .model import (
    CODATA,
    GREEN_WAVELENGTH,
    RED_WAVELENGTH,
    CavityGeometry,
    DrivingRates,
    LaserDrive,
    NVParameters,
    PhysicalConstants,
    default_geometry,
    default_parameters,
    driving_rates,
    intensity,
    validate,
)

__all__ = [
    "CODATA",
    "GREEN_WAVELENGTH",
    "RED_WAVELENGTH",
    "CavityGeometry",
    "DrivingRates",
    "LaserDrive",
    "NVParameters",
    "PhysicalConstants",
    "default_geometry",
    "default_parameters",
    "driving_rates",
    "intensity",
    "validate",
    "__version__",
]
