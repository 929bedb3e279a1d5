import numpy as np
import pytest

from nvcavity.errors import DegenerateJacobian, IoError, OutOfRange, ZeroSpectrum
from nvcavity.spectroscopy import (
    LorentzianPeak,
    Spectrum,
    cross_section_at,
    default_emission_peaks,
    fit_peaks,
    fit_report,
    fl_cross_section,
    load_spectrum,
    lorentzian_sum,
    save_spectrum,
    synthesize_spectrum,
)


def test_lorentzian_point_values():
    pk = LorentzianPeak(center=700e-9, amplitude=0.5, fwhm=20e-9)
    assert lorentzian_sum(700e-9, [pk]) == pytest.approx(0.5, rel=1e-12)
    assert lorentzian_sum(710e-9, [pk]) == pytest.approx(0.25, rel=1e-9)
    assert lorentzian_sum(690e-9, [pk]) == pytest.approx(0.25, rel=1e-9)


def test_lorentzian_sum_dominant_band():
    # around the tallest band the neighbors' tails push the sum above the
    # bare amplitude
    assert lorentzian_sum(681.5e-9, default_emission_peaks()) >= 0.6


def test_peak_validation():
    with pytest.raises(ValueError):
        LorentzianPeak(center=700e-9, amplitude=-0.1, fwhm=20e-9)
    with pytest.raises(ValueError):
        LorentzianPeak(center=700e-9, amplitude=0.1, fwhm=0.0)


def test_synthesize_reference_band():
    spec = synthesize_spectrum(default_emission_peaks(), 600e-9, 850e-9, 2000)
    assert 0.95 <= spec.intensities.max() <= 1.1
    assert spec.wavelengths.size == 2000
    assert spec.delta == pytest.approx(250e-9 / 1999, rel=1e-12)


def test_synthesize_degenerate_grids():
    two = synthesize_spectrum([], 600e-9, 850e-9, 2)
    np.testing.assert_array_equal(two.wavelengths, [600e-9, 850e-9])
    np.testing.assert_array_equal(two.intensities, [0.0, 0.0])
    with pytest.raises(ValueError):
        synthesize_spectrum([], 600e-9, 850e-9, 1)
    with pytest.raises(ValueError):
        synthesize_spectrum([], 850e-9, 600e-9, 100)


def test_spectrum_invariants():
    wl = np.linspace(600e-9, 700e-9, 50)
    with pytest.raises(ValueError, match="uniform"):
        Spectrum(np.concatenate([wl[:25], wl[25:] + 1e-9]), np.zeros(50))
    with pytest.raises(ValueError, match="increasing"):
        Spectrum(wl[::-1].copy(), np.zeros(50))
    with pytest.raises(ValueError, match="non-negative"):
        Spectrum(wl, np.full(50, -1.0))
    with pytest.raises(ValueError):
        Spectrum(wl[:1], np.zeros(1))


def test_peak_normalized():
    spec = synthesize_spectrum(default_emission_peaks(), 600e-9, 850e-9, 500)
    normed = spec.peak_normalized()
    assert normed.normalized
    assert normed.intensities.max() == pytest.approx(1.0, abs=1e-12)
    flat = Spectrum(np.linspace(600e-9, 700e-9, 10), np.zeros(10))
    with pytest.raises(ZeroSpectrum):
        flat.peak_normalized()


def test_fit_single_peak_from_perturbed_start():
    true = [LorentzianPeak(700e-9, 0.5, 20e-9)]
    spec = synthesize_spectrum(true, 600e-9, 850e-9, 1500)
    start = [LorentzianPeak(700e-9 * 1.1, 0.5 * 0.9, 20e-9 * 1.1)]
    res = fit_peaks(spec, start, max_iter=500)
    assert res.converged
    got = res.peaks[0]
    assert abs(got.center - 700e-9) < spec.delta / 10
    assert got.amplitude == pytest.approx(0.5, rel=1e-3)
    assert got.fwhm == pytest.approx(20e-9, rel=1e-3)


def test_fit_eight_peaks_noiseless_is_exact():
    peaks = default_emission_peaks()
    spec = synthesize_spectrum(peaks, 600e-9, 850e-9, 2000)
    rng = np.random.default_rng(11)
    start = [
        LorentzianPeak(
            p.center + p.fwhm * rng.uniform(-0.05, 0.05),
            p.amplitude * (1 + rng.uniform(-0.05, 0.05)),
            p.fwhm * (1 + rng.uniform(-0.05, 0.05)),
        )
        for p in peaks
    ]
    res = fit_peaks(spec, start, max_iter=500)
    assert res.converged
    assert res.residual_norm < 1e-10
    for got, want in zip(res.peaks, peaks):
        assert abs(got.center - want.center) < 1e-12
        assert got.amplitude == pytest.approx(want.amplitude, rel=1e-9)
        assert got.fwhm == pytest.approx(want.fwhm, rel=1e-9)


def test_fit_eight_peaks_with_noise_tracks_truth():
    # with 1% additive noise the least-squares minimum itself scatters by
    # a few tenths of a nm in the overlapping sidebands (see the acceptance
    # suite for the statistics); these bounds are sized to that scatter
    peaks = default_emission_peaks()
    spec = synthesize_spectrum(peaks, 600e-9, 850e-9, 2000)
    rng = np.random.default_rng(104)
    noisy = np.clip(spec.intensities + rng.normal(0, 0.01, spec.intensities.size), 0, None)
    start = [
        LorentzianPeak(
            p.center + p.fwhm * rng.uniform(-0.05, 0.05),
            p.amplitude * (1 + rng.uniform(-0.05, 0.05)),
            p.fwhm * (1 + rng.uniform(-0.05, 0.05)),
        )
        for p in peaks
    ]
    res = fit_peaks(Spectrum(spec.wavelengths, noisy), start, max_iter=400)
    assert res.converged
    # residual at the noise floor: ~sqrt(n) * sigma
    assert res.residual_norm == pytest.approx(np.sqrt(2000) * 0.01, rel=0.2)
    for got, want in zip(res.peaks, peaks):
        assert abs(got.center - want.center) < 2e-9
        assert got.amplitude == pytest.approx(want.amplitude, rel=0.35)
        assert got.fwhm == pytest.approx(want.fwhm, rel=0.25)


def test_fit_flags_not_converged():
    peaks = default_emission_peaks()
    spec = synthesize_spectrum(peaks, 600e-9, 850e-9, 1000)
    start = [
        LorentzianPeak(p.center + 2e-9, p.amplitude * 1.3, p.fwhm * 0.7) for p in peaks
    ]
    res = fit_peaks(spec, start, max_iter=2)
    assert not res.converged
    assert res.iterations == 2
    assert len(res.peaks) == 8  # best-so-far result still returned


def test_fit_rejects_collapsed_centers():
    spec = synthesize_spectrum(default_emission_peaks(), 600e-9, 850e-9, 1000)
    twin = [
        LorentzianPeak(700e-9, 0.3, 20e-9),
        LorentzianPeak(700e-9 + spec.delta / 2, 0.3, 25e-9),
    ]
    with pytest.raises(DegenerateJacobian):
        fit_peaks(spec, twin)
    with pytest.raises(ValueError):
        fit_peaks(spec, [])


def test_cross_section_reference_value():
    spec = synthesize_spectrum(default_emission_peaks(), 600e-9, 850e-9, 2000, normalized=True)
    sigma = fl_cross_section(spec, refractive_index=2.4, gamma=63.93e6)
    got = cross_section_at((spec.wavelengths, sigma), 721e-9)
    assert got == pytest.approx(3.22e-21, rel=0.15)


def test_cross_section_scale_invariance_and_gamma_scaling():
    spec = synthesize_spectrum(default_emission_peaks(), 650e-9, 800e-9, 800)
    doubled = Spectrum(spec.wavelengths, 2.0 * spec.intensities)
    base = fl_cross_section(spec)
    np.testing.assert_array_equal(fl_cross_section(doubled), base)
    tripled = Spectrum(spec.wavelengths, 3.0 * spec.intensities)
    np.testing.assert_allclose(fl_cross_section(tripled), base, rtol=1e-14)
    np.testing.assert_array_equal(fl_cross_section(spec, gamma=2 * 63.93e6), 2.0 * base)


def test_cross_section_grid_refinement():
    peaks = default_emission_peaks()
    coarse = synthesize_spectrum(peaks, 600e-9, 850e-9, 1000)
    fine = synthesize_spectrum(peaks, 600e-9, 850e-9, 4000)
    a = cross_section_at((coarse.wavelengths, fl_cross_section(coarse)), 721e-9)
    b = cross_section_at((fine.wavelengths, fl_cross_section(fine)), 721e-9)
    assert abs(a - b) / b < 1e-3


def test_cross_section_zero_spectrum():
    flat = Spectrum(np.linspace(600e-9, 700e-9, 10), np.zeros(10))
    with pytest.raises(ZeroSpectrum):
        fl_cross_section(flat)


def test_cross_section_at_interpolation_rules():
    wl = np.array([600e-9, 610e-9, 620e-9])
    vals = np.array([1.0, 3.0, 5.0])
    assert cross_section_at((wl, vals), 610e-9) == 3.0
    assert cross_section_at((wl, vals), 605e-9) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(OutOfRange):
        cross_section_at((wl, vals), 599e-9)
    with pytest.raises(OutOfRange):
        cross_section_at((wl, vals), 621e-9)


def test_fit_report_structure():
    spec = synthesize_spectrum([LorentzianPeak(700e-9, 0.5, 20e-9)], 650e-9, 750e-9, 400)
    res = fit_peaks(spec, [LorentzianPeak(701e-9, 0.45, 22e-9)])
    import json

    report = json.loads(fit_report(res))
    assert report["converged"] is True
    assert report["peaks"][0]["center_nm"] == pytest.approx(700.0, abs=1e-3)
    assert report["peaks"][0]["fwhm_nm"] == pytest.approx(20.0, rel=1e-3)


def test_spectrum_csv_round_trip(tmp_path):
    spec = synthesize_spectrum(default_emission_peaks(), 600e-9, 850e-9, 300)
    path = tmp_path / "spec.csv"
    save_spectrum(spec, path)
    back = load_spectrum(path)
    np.testing.assert_allclose(back.wavelengths, spec.wavelengths, rtol=1e-12)
    np.testing.assert_array_equal(back.intensities, spec.intensities)


def test_load_spectrum_requires_header(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("600.0,0.1\n601.0,0.2\n")
    with pytest.raises(IoError, match="header"):
        load_spectrum(path)
    with pytest.raises(IoError):
        load_spectrum(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("wavelength_nm,intensity\n600.0,oops\n601.0,0.2\n")
    with pytest.raises(IoError, match="malformed"):
        load_spectrum(bad)
