"""Emission-spectrum tools.

Covers the three spectral tasks the rest of the package leans on: modeling
a measured emission band as a sum of Lorentzian peaks, fitting that model
to spectra, and turning a normalized emission spectrum into the
wavelength-dependent stimulated-emission cross-section via the standard
radiative-rate integral. Wavelengths are SI metres everywhere in memory;
nanometres appear only in the CSV/report boundary formats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._lm import levenberg_marquardt
from .errors import DegenerateJacobian, IoError, OutOfRange, ZeroSpectrum
from .model import CODATA

__all__ = [
    "Spectrum",
    "LorentzianPeak",
    "PeakFitResult",
    "default_emission_peaks",
    "lorentzian_sum",
    "synthesize_spectrum",
    "fit_peaks",
    "fl_cross_section",
    "cross_section_at",
    "fit_report",
    "load_spectrum",
    "save_spectrum",
]

_UNIFORM_RTOL = 1e-6


@dataclass(frozen=True)
class LorentzianPeak:
    """One emission band: center and FWHM in metres, peak-height amplitude."""

    center: float
    amplitude: float
    fwhm: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude {self.amplitude!r} must be >= 0")
        if self.fwhm <= 0:
            raise ValueError(f"fwhm {self.fwhm!r} must be > 0")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Uniformly sampled intensity vs wavelength.

    Wavelengths must increase strictly with spacing uniform to one part in
    1e6; intensities are non-negative and dimensionless. normalized marks a
    spectrum scaled so its maximum is one.
    """

    wavelengths: np.ndarray
    intensities: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        inten = np.asarray(self.intensities, dtype=float)
        if wl.ndim != 1 or wl.shape != inten.shape:
            raise ValueError("wavelengths and intensities must be equal-length 1-D arrays")
        if wl.size < 2:
            raise ValueError("a spectrum needs at least two samples")
        steps = np.diff(wl)
        if steps.min() <= 0:
            raise ValueError("wavelengths must be strictly increasing")
        delta = (wl[-1] - wl[0]) / (wl.size - 1)
        if np.abs(steps - delta).max() > _UNIFORM_RTOL * delta:
            raise ValueError("wavelength grid is not uniform")
        if inten.min() < 0:
            raise ValueError("intensities must be non-negative")
        if self.normalized and abs(inten.max() - 1.0) > 1e-9:
            raise ValueError("normalized spectrum must peak at 1")
        wl = wl.copy()
        inten = inten.copy()
        wl.flags.writeable = False
        inten.flags.writeable = False
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "intensities", inten)

    @property
    def delta(self) -> float:
        """Grid spacing in metres."""
        return float((self.wavelengths[-1] - self.wavelengths[0]) / (self.wavelengths.size - 1))

    def peak_normalized(self) -> "Spectrum":
        top = float(self.intensities.max())
        if top <= 0.0:
            raise ZeroSpectrum("cannot normalize an all-zero spectrum")
        return Spectrum(self.wavelengths, self.intensities / top, normalized=True)


@dataclass(frozen=True)
class PeakFitResult:
    peaks: tuple
    residual_norm: float
    converged: bool
    iterations: int


def default_emission_peaks() -> tuple:
    """Eight-band model of the centre's room-temperature emission.

    The first band is the zero-phonon line, the rest are phonon sidebands;
    one of them sits at the 721 nm seed wavelength.
    """
    table = (
        (636.9, 0.1, 3.0),
        (658.3, 0.3, 21.0),
        (681.5, 0.6, 31.7),
        (703.4, 0.6, 31.7),
        (721.0, 0.3, 30.4),
        (739.0, 0.3, 31.7),
        (758.5, 0.2, 33.1),
        (782.3, 0.1, 30.4),
    )
    return tuple(
        LorentzianPeak(center=c * 1e-9, amplitude=a, fwhm=w * 1e-9) for c, a, w in table
    )


def lorentzian_sum(lam, peaks):
    """Sum of Lorentzians; each contributes its amplitude at its own center.

    lam may be a scalar or an array; the return value matches its shape.
    """
    lam = np.asarray(lam, dtype=float)
    total = np.zeros_like(lam)
    for pk in peaks:
        half = 0.5 * pk.fwhm
        total += pk.amplitude * half**2 / ((lam - pk.center) ** 2 + half**2)
    if total.ndim == 0:
        return float(total)
    return total


def synthesize_spectrum(
    peaks, lambda_min: float, lambda_max: float, n_points: int, normalized: bool = False
) -> Spectrum:
    """Evaluate the peak model on a uniform grid; optionally scale peak to 1."""
    if n_points < 2:
        raise ValueError("need at least two grid points")
    if not lambda_min < lambda_max:
        raise ValueError("lambda_min must be below lambda_max")
    wl = np.linspace(lambda_min, lambda_max, n_points)
    inten = lorentzian_sum(wl, peaks) if peaks else np.zeros_like(wl)
    if normalized:
        top = inten.max()
        if top <= 0.0:
            raise ZeroSpectrum("cannot normalize an all-zero spectrum")
        inten = inten / top
    return Spectrum(wl, inten, normalized=normalized)


def _pack(peaks) -> np.ndarray:
    return np.array([v for pk in peaks for v in (pk.center, pk.amplitude, pk.fwhm)])


def _unpack(x) -> tuple:
    return tuple(
        LorentzianPeak(center=x[3 * i], amplitude=x[3 * i + 1], fwhm=x[3 * i + 2])
        for i in range(len(x) // 3)
    )


def _check_separated(centers, delta):
    c = np.sort(np.asarray(centers))
    gaps = np.diff(c)
    if gaps.size and gaps.min() < delta:
        raise DegenerateJacobian(
            f"two peak centers within one grid spacing ({gaps.min():.3e} m < {delta:.3e} m)"
        )


def fit_peaks(spectrum: Spectrum, initial, max_iter: int = 200, tol: float = 1e-10) -> PeakFitResult:
    """Nonlinear least-squares fit of a sum of Lorentzians to a spectrum.

    Every peak contributes three parameters (center, amplitude, fwhm) with
    amplitude kept >= 0 and fwhm > 0 by projection. Runs damped least
    squares with the analytic Jacobian. Running out of iterations returns
    the best point flagged converged=False rather than raising; two centers
    collapsing within one grid spacing raises DegenerateJacobian since the
    corresponding Jacobian columns become linearly dependent.
    """
    if not initial:
        raise ValueError("need at least one initial peak")
    wl = spectrum.wavelengths
    data = spectrum.intensities
    delta = spectrum.delta
    n_peaks = len(initial)

    _check_separated([pk.center for pk in initial], delta)

    def residual_jac(x):
        model = np.zeros_like(wl)
        jac = np.empty((wl.size, 3 * n_peaks))
        for i in range(n_peaks):
            c, a, w = x[3 * i], x[3 * i + 1], x[3 * i + 2]
            half = 0.5 * w
            d = wl - c
            denom = d**2 + half**2
            shape = half**2 / denom
            model += a * shape
            jac[:, 3 * i] = a * half**2 * 2.0 * d / denom**2
            jac[:, 3 * i + 1] = shape
            # d/dw = (1/2) d/d(half); peak height stays fixed at the center
            jac[:, 3 * i + 2] = a * half * d**2 / denom**2
        return model - data, jac

    def project(x):
        x = x.copy()
        for i in range(n_peaks):
            x[3 * i + 1] = max(x[3 * i + 1], 0.0)
            x[3 * i + 2] = max(x[3 * i + 2], delta * 1e-3)
        return x

    def on_accept(x):
        _check_separated(x[0::3], delta)

    try:
        x, res_norm, converged, iterations = levenberg_marquardt(
            residual_jac,
            _pack(initial),
            max_iter=max_iter,
            tol=tol,
            project=project,
            on_accept=on_accept,
        )
    except np.linalg.LinAlgError as exc:
        raise DegenerateJacobian(f"normal equations lost rank: {exc}") from exc

    return PeakFitResult(
        peaks=_unpack(x), residual_norm=res_norm, converged=converged, iterations=iterations
    )


def fl_cross_section(spectrum: Spectrum, refractive_index: float = 2.4, gamma: float = 63.93e6):
    """Stimulated-emission cross-section curve from an emission spectrum.

    sigma(lambda) = gamma * lambda^5 * I(lambda) / (8 pi n^2 c * S) with
    S = sum(lambda_i * I_i) * delta evaluated by the left-endpoint rule.
    The spectrum's absolute scale cancels between numerator and S, so
    normalization is optional. Returns one sigma value per grid point, m^2.
    """
    if refractive_index <= 0:
        raise ValueError("refractive index must be positive")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    wl = spectrum.wavelengths
    inten = spectrum.intensities
    integral = float(np.sum(wl[:-1] * inten[:-1]) * spectrum.delta)
    if integral <= 0.0:
        raise ZeroSpectrum("spectrum integrates to zero")
    denom = 8.0 * np.pi * refractive_index**2 * CODATA.light_speed * integral
    return gamma * wl**5 * inten / denom


def cross_section_at(sigma_curve, lam: float) -> float:
    """Linear interpolation on a (wavelengths, values) cross-section curve."""
    wl, values = sigma_curve
    wl = np.asarray(wl, dtype=float)
    values = np.asarray(values, dtype=float)
    if not wl[0] <= lam <= wl[-1]:
        raise OutOfRange(
            f"{lam!r} m outside the tabulated range [{wl[0]!r}, {wl[-1]!r}]"
        )
    return float(np.interp(lam, wl, values))


def fit_report(result: PeakFitResult) -> str:
    """JSON report of a peak fit, wavelengths in nm."""
    payload = {
        "converged": result.converged,
        "iterations": result.iterations,
        "residual_norm": result.residual_norm,
        "peaks": [
            {
                "center_nm": pk.center * 1e9,
                "amplitude": pk.amplitude,
                "fwhm_nm": pk.fwhm * 1e9,
            }
            for pk in result.peaks
        ],
    }
    return json.dumps(payload, indent=2)


def save_spectrum(spectrum: Spectrum, path) -> None:
    """Write a two-column CSV (wavelength_nm, intensity) with a header row."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write("wavelength_nm,intensity\n")
            for wl, inten in zip(spectrum.wavelengths, spectrum.intensities):
                fh.write(f"{float(wl) * 1e9!r},{float(inten)!r}\n")
    except OSError as exc:
        raise IoError(f"cannot write spectrum to {path}: {exc}") from exc


def load_spectrum(path) -> Spectrum:
    """Read the two-column CSV format written by save_spectrum.

    '#' lines are comments; the first data line must be the header row.
    """
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh]
    except OSError as exc:
        raise IoError(f"cannot read spectrum from {path}: {exc}") from exc

    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    if not rows:
        raise IoError(f"{path}: no content")
    header = [col.strip().lower() for col in rows[0].split(",")]
    if header[:2] != ["wavelength_nm", "intensity"]:
        raise IoError(f"{path}: expected header 'wavelength_nm,intensity', got {rows[0]!r}")
    wl = []
    inten = []
    for ln in rows[1:]:
        cols = ln.split(",")
        if len(cols) < 2:
            raise IoError(f"{path}: malformed row {ln!r}")
        try:
            wl.append(float(cols[0]) * 1e-9)
            inten.append(float(cols[1]))
        except ValueError as exc:
            raise IoError(f"{path}: malformed row {ln!r}") from exc
    try:
        return Spectrum(np.array(wl), np.array(inten))
    except ValueError as exc:
        raise IoError(f"{path}: bad spectrum data: {exc}") from exc
