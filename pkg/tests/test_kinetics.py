import numpy as np
import pytest

from nvcavity.errors import DegenerateSteadyState
from nvcavity.kinetics import (
    FULL,
    NV_MINUS_ONLY,
    Populations,
    build_rate_matrix,
    evolve,
    integrate,
    residual,
    steady_state,
)
from nvcavity.model import default_parameters, driving_rates

from reference_kinetics import dark_ground_split, reference_rhs


def jittered_parameters(rng):
    p = default_parameters()

    def j():
        return float(rng.uniform(0.5, 2.0))

    return p.with_overrides(
        r31=p.r31 * j(),
        r42=p.r42 * j(),
        r35=p.r35 * j(),
        r45=p.r45 * j(),
        r51=p.r51 * j(),
        r52=p.r52 * j(),
        r76=p.r76 * j(),
        sigma_g=p.sigma_g * j(),
        sigma_r=p.sigma_r * j(),
        sigma_se=p.sigma_se * j(),
        sigma_I_g=p.sigma_I_g * j(),
        sigma_I_r=p.sigma_I_r * j(),
        sigma_I_s=p.sigma_I_s * j(),
        sigma_R_g=p.sigma_R_g * j(),
        sigma_R_r=p.sigma_R_r * j(),
        xi=p.xi * j(),
        eta=float(rng.uniform(0.0, 1.0)),
    )


def random_simplex(rng, n=7):
    return rng.dirichlet(np.ones(n))


def random_intensities(rng):
    ig = 10.0 ** rng.uniform(6.0, 9.3)
    ir = 0.0 if rng.uniform() < 0.2 else 10.0 ** rng.uniform(5.0, 9.3)
    return float(ig), float(ir)


def test_matrix_matches_scalar_reference():
    # the oracle writes each derivative as one explicit expression; the
    # matrix-vector product must agree on random draws in both variants
    rng = np.random.default_rng(101)
    for _ in range(150):
        params = jittered_parameters(rng)
        ig, ir = random_intensities(rng)
        rates = driving_rates(params, ig, ir)
        p = random_simplex(rng)
        for variant, flag in ((FULL, False), (NV_MINUS_ONLY, True)):
            m = build_rate_matrix(params, rates, variant)
            want = np.array(reference_rhs(p, rates, params, nv_minus_only=flag))
            scale = np.abs(m.m).max()
            np.testing.assert_allclose(m.m @ p, want, rtol=1e-12, atol=1e-12 * scale)


def test_columns_sum_to_zero():
    rng = np.random.default_rng(202)
    for _ in range(100):
        params = jittered_parameters(rng)
        ig, ir = random_intensities(rng)
        rates = driving_rates(params, ig, ir)
        for variant in (FULL, NV_MINUS_ONLY):
            m = build_rate_matrix(params, rates, variant).m
            bound = 1e-15 * np.abs(m).max()
            assert np.abs(m.sum(axis=0)).max() <= bound


def test_off_diagonal_sign_structure():
    rng = np.random.default_rng(303)
    params = jittered_parameters(rng)
    rates = driving_rates(params, 5e8, 1e9)
    m = build_rate_matrix(params, rates).m
    off = m - np.diag(np.diag(m))
    assert off.min() >= 0.0
    assert np.diag(m).max() <= 0.0


def test_dark_matrix_keeps_only_spontaneous_entries():
    params = default_parameters()
    dark = driving_rates(params, 0.0, 0.0)
    m = build_rate_matrix(params, dark).m
    assert m[2, 2] == -(params.r31 + params.r35)
    expected = np.zeros((7, 7))
    expected[0, 2] = params.r31
    expected[1, 3] = params.r42
    expected[4, 2] = params.r35
    expected[4, 3] = params.r45
    expected[0, 4] = params.r51
    expected[1, 4] = params.r52
    expected[5, 6] = params.r76
    expected[2, 2] = -(params.r31 + params.r35)
    expected[3, 3] = -(params.r42 + params.r45)
    expected[4, 4] = -(params.r51 + params.r52)
    expected[6, 6] = -params.r76
    np.testing.assert_array_equal(m, expected)


def test_build_rejects_invalid_parameters():
    params = default_parameters().with_overrides(r35=-1.0)
    rates = driving_rates(default_parameters(), 1e8, 0.0)
    with pytest.raises(ValueError, match="r35"):
        build_rate_matrix(params, rates)
    with pytest.raises(ValueError, match="variant"):
        build_rate_matrix(default_parameters(), rates, "partial")


def test_dark_steady_state_is_degenerate():
    params = default_parameters()
    dark = driving_rates(params, 0.0, 0.0)
    for variant in (FULL, NV_MINUS_ONLY):
        with pytest.raises(DegenerateSteadyState):
            steady_state(build_rate_matrix(params, dark, variant))


def test_red_only_drains_into_neutral_ground():
    # without green the neutral ground state cannot be re-excited, so all
    # population ends there
    params = default_parameters()
    rates = driving_rates(params, 0.0, 1e9)
    pops = steady_state(build_rate_matrix(params, rates))
    assert pops.p6 == pytest.approx(1.0, abs=1e-12)
    assert pops.p1 + pops.p2 + pops.p3 + pops.p4 + pops.p5 + pops.p7 <= 1e-12


def test_steady_state_residual_is_small():
    params = default_parameters()
    rates = driving_rates(params, 3.8e8, 1.0e9)
    m = build_rate_matrix(params, rates)
    pops = steady_state(m)
    scale = np.abs(m.m).max()
    assert np.abs(residual(m, pops)).max() < 1e-12 * scale
    assert pops.p.sum() == pytest.approx(1.0, abs=1e-12)


def test_steady_state_matches_time_integration():
    rng = np.random.default_rng(404)
    for _ in range(8):
        ig = 10.0 ** rng.uniform(8.2, 9.3)
        ir = 0.0 if rng.uniform() < 0.3 else 10.0 ** rng.uniform(6.0, 9.3)
        params = default_parameters()
        m = build_rate_matrix(params, driving_rates(params, ig, ir))
        target = steady_state(m)
        for _ in range(2):
            start = Populations.from_vector(random_simplex(rng))
            final = evolve(m, start, 10e-3)
            assert np.abs(final.p - target.p).max() < 1e-8


def test_evolve_zero_duration_returns_initial():
    params = default_parameters()
    m = build_rate_matrix(params, driving_rates(params, 1e8, 1e8))
    start = Populations(np.array([1.0, 0, 0, 0, 0, 0, 0]))
    assert evolve(m, start, 0.0) is start


def test_dark_relaxation_branching():
    # from the excited spin state the ground split is fixed by the two decay
    # paths; compare against the closed-form branching result
    params = default_parameters()
    m = build_rate_matrix(params, driving_rates(params, 0.0, 0.0))
    start = Populations(np.array([0.0, 0, 1.0, 0, 0, 0, 0]))
    final = evolve(m, start, 1e-3)
    want_p1, want_p2 = dark_ground_split(params)
    assert final.p1 == pytest.approx(want_p1, abs=1e-9)
    assert final.p2 == pytest.approx(want_p2, abs=1e-9)
    assert final.p3 + final.p4 + final.p5 + final.p6 + final.p7 < 1e-12


def test_trajectory_conserves_total_and_stays_positive():
    rng = np.random.default_rng(505)
    params = default_parameters()
    for _ in range(5):
        ig, ir = random_intensities(rng)
        m = build_rate_matrix(params, driving_rates(params, ig, ir))
        start = Populations.from_vector(random_simplex(rng))
        t, y = integrate(m, start, 1e-3)
        assert np.abs(y.sum(axis=0) - 1.0).max() <= 1e-9
        assert y.min() >= -1e-8


def test_residual_of_ground_state_in_dark_is_zero():
    params = default_parameters()
    m = build_rate_matrix(params, driving_rates(params, 0.0, 0.0))
    p = Populations(np.array([1.0, 0, 0, 0, 0, 0, 0]))
    np.testing.assert_array_equal(residual(m, p), np.zeros(7))


def test_variant_zeroes_red_pump_and_neutral_levels():
    params = default_parameters()
    rates = driving_rates(params, 3.8e8, 1.0e9)
    m = build_rate_matrix(params, rates, NV_MINUS_ONLY).m
    assert m[2, 0] == rates.k_pump_g  # no red contribution to the pump
    assert np.all(m[5:, :] == 0.0)
    assert np.all(m[:, 5:] == 0.0)


def test_variant_matches_full_model_with_charge_channels_off():
    # switching off every charge-state channel in the full model (ionization,
    # recombination, red ground absorption, neutral driving and decay) must
    # reproduce the frozen-charge variant bit for bit
    params = default_parameters()
    off = params.with_overrides(
        sigma_r=0.0,
        sigma_I_g=0.0,
        sigma_I_r=0.0,
        sigma_I_s=0.0,
        sigma_R_g=0.0,
        sigma_R_r=0.0,
        xi=0.0,
        eta=0.0,
        r76=0.0,
    )
    ig, ir = 3.8e8, 1.0e9
    m_full = build_rate_matrix(off, driving_rates(off, ig, ir), FULL)
    m_variant = build_rate_matrix(params, driving_rates(params, ig, ir), NV_MINUS_ONLY)
    np.testing.assert_array_equal(m_full.m, m_variant.m)

    rng = np.random.default_rng(606)
    start = np.zeros(7)
    start[:5] = rng.dirichlet(np.ones(5))
    start = Populations(start)
    a = evolve(m_full, start, 1e-4)
    b = evolve(m_variant, start, 1e-4)
    np.testing.assert_array_equal(a.p, b.p)

    # with levels 6,7 fully disconnected the 7x7 kernel is degenerate; the
    # variant solver works on the live 5-level block instead
    with pytest.raises(DegenerateSteadyState):
        steady_state(m_full)
    target = steady_state(m_variant)
    assert target.p6 == 0.0 and target.p7 == 0.0
    final = evolve(m_full, start, 10e-3)
    assert np.abs(final.p - target.p).max() < 1e-8


def test_populations_from_vector_clips_and_normalizes():
    v = np.array([0.5, 0.5, -1e-10, 0.0, 0.0, 0.0, 0.0])
    pops = Populations.from_vector(v)
    assert pops.p3 == 0.0
    assert pops.p.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        Populations.from_vector(np.array([0.5, 0.5, -1e-7, 0, 0, 0, 0]))


def test_populations_constructor_enforces_simplex():
    with pytest.raises(ValueError):
        Populations(np.array([0.5, 0.6, 0, 0, 0, 0, 0]))
    with pytest.raises(ValueError):
        Populations(np.array([1.5, -0.5, 0, 0, 0, 0, 0]))
    with pytest.raises(ValueError):
        Populations(np.zeros(6))
    uniform = Populations.from_vector(np.full(7, 1.0 / 7.0))
    assert uniform.p1 == pytest.approx(1.0 / 7.0, rel=1e-15)


def test_populations_vector_is_immutable():
    pops = Populations(np.array([1.0, 0, 0, 0, 0, 0, 0]))
    with pytest.raises(ValueError):
        pops.p[0] = 0.5
    out = pops.as_vector()
    out[0] = 0.0
    assert pops.p1 == 1.0
