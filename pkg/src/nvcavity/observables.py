"""Measurable quantities derived from steady-state populations.

Three outputs matter downstream: the amplification factor of the seeded
cavity (single-pass stimulated gain over the seed, always >= 1 here), the
spontaneous-emission factor (in-band fluorescence with the seed relative to
green pumping alone), and the charge-state population totals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import ZeroDenominator
from .kinetics import Populations
from .model import CavityGeometry, NVParameters

__all__ = [
    "GainContext",
    "ObservablePoint",
    "ChargeFractions",
    "amplification_factor",
    "spontaneous_factor",
    "charge_fractions",
]

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GainContext:
    """The fixed factors of the gain formula, separate from the populations.

    Collects field enhancement, stimulated-emission cross-section, the
    neutral-state emission ratios, defect density, and the medium thickness.
    """

    field_enhancement_F: float
    sigma_se: float
    eta: float
    beta: float
    rho_nv: float
    sample_length: float

    def __post_init__(self):
        for name in ("field_enhancement_F", "sigma_se", "rho_nv", "sample_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eta < 0 or self.beta < 0:
            raise ValueError("emission ratios must be non-negative")

    @classmethod
    def from_parts(cls, params: NVParameters, geom: CavityGeometry) -> "GainContext":
        return cls(
            field_enhancement_F=geom.field_enhancement_F,
            sigma_se=params.sigma_se,
            eta=params.eta,
            beta=params.beta,
            rho_nv=params.rho_nv,
            sample_length=params.sample_length,
        )


class ChargeFractions(NamedTuple):
    nv_minus_total: float
    nv_zero_total: float
    p_minus_excited: float
    p_zero_excited: float


@dataclass(frozen=True)
class ObservablePoint:
    """One evaluated operating point of a power sweep."""

    green_power: float
    red_power: float
    f_amp: float
    f_sp: float
    p_minus_excited: float
    p_zero_excited: float
    nv_minus_total: float
    nv_zero_total: float

    def __post_init__(self):
        if self.f_amp < 1.0:
            raise ValueError(f"f_amp {self.f_amp!r} below 1; the model has no absorption")
        for name in ("p_minus_excited", "p_zero_excited", "nv_minus_total", "nv_zero_total"):
            frac = getattr(self, name)
            if not 0.0 <= frac <= 1.0 + _SUM_TOL:
                raise ValueError(f"{name} = {frac!r} outside [0, 1]")
        total = self.nv_minus_total + self.nv_zero_total
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"charge totals sum to {total!r}, not 1")

    @classmethod
    def from_populations(
        cls,
        green_power: float,
        red_power: float,
        p: Populations,
        p_green_only: Populations,
        ctx: GainContext,
    ) -> "ObservablePoint":
        frac = charge_fractions(p)
        return cls(
            green_power=green_power,
            red_power=red_power,
            f_amp=amplification_factor(p, ctx),
            f_sp=spontaneous_factor(p, p_green_only, ctx.beta),
            p_minus_excited=frac.p_minus_excited,
            p_zero_excited=frac.p_zero_excited,
            nv_minus_total=frac.nv_minus_total,
            nv_zero_total=frac.nv_zero_total,
        )


def amplification_factor(p: Populations, ctx: GainContext) -> float:
    """Seeded-cavity amplification factor, 1 + half the round-trip gain.

    Both charge states contribute stimulated photons at the seed wavelength,
    the neutral one scaled by eta; only half of the stimulated power ends up
    co-propagating with the seed mode, hence the 1/2.
    """
    excited = p.p3 + p.p4 + ctx.eta * p.p7
    gain = ctx.field_enhancement_F * ctx.sigma_se * ctx.rho_nv * ctx.sample_length
    return 1.0 + 0.5 * excited * gain


def spontaneous_factor(p_with_red: Populations, p_green_only: Populations, beta: float) -> float:
    """In-band spontaneous emission relative to the green-only reference.

    Emission tracks the radiating excited fractions, with the neutral state
    weighted by its spontaneous rate ratio beta. The reference populations
    must come from a solve with zero red intensity.
    """
    num = p_with_red.p3 + p_with_red.p4 + beta * p_with_red.p7
    den = p_green_only.p3 + p_green_only.p4 + beta * p_green_only.p7
    if den == 0.0:
        raise ZeroDenominator("reference point has no excited population (no pumping)")
    return num / den


def charge_fractions(p: Populations) -> ChargeFractions:
    """Charge totals and the radiating excited fraction of each state."""
    return ChargeFractions(
        nv_minus_total=p.p1 + p.p2 + p.p3 + p.p4 + p.p5,
        nv_zero_total=p.p6 + p.p7,
        p_minus_excited=p.p3 + p.p4,
        p_zero_excited=p.p7,
    )
