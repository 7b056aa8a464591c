import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimode import OscillatorParams, SqueezeSpec, evolve_trajectory
from trimode.errors import (
    NotApplicableError,
    NumericalError,
    ParameterError,
    UnphysicalStateError,
)
from trimode.measures import (
    MeasuredMode,
    averaging_grid,
    check_averaging_grid,
    default_samples,
    default_window,
    discord_batch,
    dynamical_fidelity_susceptibility,
    entropy_function,
    fidelity_aux,
    fidelity_batch,
    gaussian_discord,
    gaussian_fidelity,
    hmr_pt_eigenvalues,
    log_negativity,
    log_negativity_batch,
    measure_series,
    pt_spectrum,
    real_reduced,
    susceptibility_batch,
    symplectic_spectrum_batch,
    time_average,
    weak_coupling_prediction,
)
from trimode.spectrum import closed_form_spectrum
from trimode.symplectic import (
    CovarianceState,
    ModeBasis,
    partial_transpose,
    random_physical_state,
    random_symplectic,
    symplectic_eigenvalues,
    symplectic_form,
)


def tmsv(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum in (x_A, x_C, p_A, p_C) order."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    return np.array([[c, s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, -s, c]])


def real_state(m: np.ndarray) -> CovarianceState:
    return CovarianceState(m, ModeBasis.REAL)


def squeezed_1mode(r: float) -> CovarianceState:
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    return real_state(np.array([[c, -s], [-s, c]]))


def thermal(n: float, modes: int = 1) -> CovarianceState:
    return real_state(np.eye(2 * modes) * (2 * n + 1))


# ----------------------------------------------------------------------------
# spectrum and log negativity


def test_batch_spectrum_matches_oracle(rng):
    for _ in range(50):
        m = random_physical_state(2, rng, scale=0.8).matrix.real
        nu = np.array(symplectic_spectrum_batch(m[None])).ravel()
        ref = symplectic_eigenvalues(m, symplectic_form(2, ModeBasis.REAL))
        assert np.allclose(nu, ref, rtol=1e-10)
        pt = partial_transpose(real_state(m), 1).matrix.real
        nu_t = np.array(symplectic_spectrum_batch(m[None], transposed=True)).ravel()
        assert np.allclose(nu_t, symplectic_eigenvalues(pt, symplectic_form(2, ModeBasis.REAL)), rtol=1e-10)


def test_spectrum_rejects_indefinite():
    with pytest.raises(UnphysicalStateError):
        symplectic_spectrum_batch(-np.eye(4)[None])


def test_vacuum_measures_zero():
    vac = real_state(np.eye(4))
    assert log_negativity(vac) == 0.0
    assert gaussian_discord(vac) == 0.0


@pytest.mark.parametrize("r", [0.1, 0.5, 1.2])
def test_tmsv_log_negativity(r):
    assert log_negativity(real_state(tmsv(r))) == pytest.approx(2 * r / math.log(2), rel=1e-12)
    assert log_negativity_batch(tmsv(r)[None])[0] == pytest.approx(2 * r / math.log(2), rel=1e-12)


@pytest.mark.parametrize("r", [0.1, 0.5, 1.2])
def test_tmsv_discord(r):
    # pure state: discord equals the marginal entropy f(cosh 2r)
    expected = float(entropy_function(math.cosh(2 * r)))
    for mode in MeasuredMode:
        assert gaussian_discord(real_state(tmsv(r)), mode) == pytest.approx(expected, rel=1e-10)


def test_pt_spectrum_of_tmsv():
    nu = pt_spectrum(real_state(tmsv(0.5))).nu_tilde
    assert nu == pytest.approx([math.exp(-1.0), math.exp(1.0)])


def test_unphysical_state_rejected():
    # positive definite but violates the uncertainty relation
    m = np.diag([0.5, 0.5, 0.5, 0.5])
    with pytest.raises(UnphysicalStateError):
        log_negativity(real_state(m))
    with pytest.raises(UnphysicalStateError):
        log_negativity_batch(m[None])
    with pytest.raises(UnphysicalStateError):
        discord_batch(m[None])


def test_log_negativity_never_negative_zero():
    out = log_negativity_batch(np.eye(4)[None])
    assert not np.signbit(out[0])


def test_separable_states_have_zero_negativity(rng):
    for _ in range(20):
        a = random_physical_state(1, rng).matrix.real
        c = random_physical_state(1, rng).matrix.real
        m = np.zeros((4, 4))
        m[np.ix_([0, 2], [0, 2])] = a
        m[np.ix_([1, 3], [1, 3])] = c
        assert log_negativity_batch(m[None])[0] == 0.0
        assert discord_batch(m[None])[0] < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_measures_invariant_under_local_symplectics(seed):
    rng = np.random.default_rng(seed)
    m = random_physical_state(2, rng, scale=0.5).matrix.real
    # local transformation acting on A and C separately
    sa, sc = random_symplectic(1, rng), random_symplectic(1, rng)
    local = np.zeros((4, 4))
    local[np.ix_([0, 2], [0, 2])] = sa
    local[np.ix_([1, 3], [1, 3])] = sc
    moved = local @ m @ local.T
    assert log_negativity_batch(moved[None])[0] == pytest.approx(log_negativity_batch(m[None])[0], abs=1e-9)
    for mode in MeasuredMode:
        assert discord_batch(moved[None], mode)[0] == pytest.approx(discord_batch(m[None], mode)[0], abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_measures_nonnegative(seed):
    m = random_physical_state(2, np.random.default_rng(seed), scale=0.7).matrix.real
    assert log_negativity_batch(m[None])[0] >= 0.0
    assert discord_batch(m[None], MeasuredMode.A)[0] >= 0.0
    assert discord_batch(m[None], MeasuredMode.C)[0] >= 0.0


def test_entropy_function():
    assert entropy_function(1.0) == 0.0
    assert entropy_function(3.0) == pytest.approx(2 * math.log2(2) - 1 * math.log2(1))
    with pytest.raises(UnphysicalStateError):
        entropy_function(0.9)


# ----------------------------------------------------------------------------
# HMR closed forms


def test_hmr_pt_spot_value(hmr_params):
    k1 = math.sqrt(hmr_params.omega_a**2 - hmr_params.lambda_a**2)
    nu1, nu2 = hmr_pt_eigenvalues(hmr_params, math.pi / k1)
    assert nu1 == 1.0
    assert nu2 == pytest.approx(math.sqrt(1.5), rel=1e-12)


def test_hmr_requires_exact_point(generic_params):
    with pytest.raises(NotApplicableError):
        hmr_pt_eigenvalues(generic_params, 1.0)


# ----------------------------------------------------------------------------
# fidelity


def test_fidelity_squeezed_pair():
    assert gaussian_fidelity(squeezed_1mode(0.3), squeezed_1mode(0.7)) == pytest.approx(
        1 / math.sqrt(math.cosh(0.4)), abs=1e-12
    )


@pytest.mark.parametrize("n1, n2", [(0.5, 2.0), (0.0, 1.0), (3.0, 3.0)])
def test_fidelity_thermal(n1, n2):
    expected = 1.0 / (math.sqrt((n1 + 1) * (n2 + 1)) - math.sqrt(n1 * n2))
    assert gaussian_fidelity(thermal(n1), thermal(n2)) == pytest.approx(expected, rel=1e-12)
    # product of two identical single-mode problems
    assert gaussian_fidelity(thermal(n1, 2), thermal(n2, 2)) == pytest.approx(expected**2, rel=1e-10)


def test_fidelity_pure_pair_overlap():
    a, b = tmsv(0.4), tmsv(0.9)
    # |<psi|phi>|^2 = det((a + b) / 2)^(-1/2)
    expected = np.linalg.det((a + b) / 2) ** -0.25
    assert fidelity_batch(a[None], b[None])[0] == pytest.approx(expected, rel=1e-12)


def test_fidelity_routes_agree(rng):
    for _ in range(20):
        s1 = random_physical_state(2, rng)
        s2 = random_physical_state(2, rng)
        aux = fidelity_aux(s1, s2)
        assert abs(aux.f_tot - aux.f_tot_w) < 1e-8
        assert gaussian_fidelity(s1, s2) == pytest.approx(aux.fidelity, abs=1e-9)


def test_three_mode_fidelity_uses_aux_route(rng):
    s1 = random_physical_state(3, rng)
    assert gaussian_fidelity(s1, s1) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_fidelity_properties(seed):
    rng = np.random.default_rng(seed)
    s1 = random_physical_state(2, rng, scale=0.6)
    s2 = random_physical_state(2, rng, scale=0.6)
    f12 = gaussian_fidelity(s1, s2)
    assert 0.0 < f12 <= 1.0
    assert f12 == pytest.approx(gaussian_fidelity(s2, s1), abs=1e-12)
    assert gaussian_fidelity(s1, s1) == pytest.approx(1.0, abs=1e-10)
    # invariant under a joint symplectic transformation
    s = random_symplectic(2, rng, scale=0.3)
    t1 = real_state(s @ s1.matrix.real @ s.T)
    t2 = real_state(s @ s2.matrix.real @ s.T)
    assert gaussian_fidelity(t1, t2) == pytest.approx(f12, abs=1e-9)


def test_fidelity_mode_mismatch():
    with pytest.raises(ParameterError):
        gaussian_fidelity(thermal(1.0), thermal(1.0, 2))


# ----------------------------------------------------------------------------
# fidelity susceptibility


def test_susceptibility_zero_when_stationary():
    p = OscillatorParams(1.0, 1.3, 0.0, 0.0, 0.0, 0.0)
    tr = evolve_trajectory(p, SqueezeSpec(), np.linspace(0, 10, 20))
    assert np.max(susceptibility_batch(tr, tr.times, 1e-3)) < 1e-12


def test_susceptibility_positive_on_moving_state(generic_params, squeezed):
    tr = evolve_trajectory(generic_params, squeezed, np.linspace(0, 5, 20))
    chi = susceptibility_batch(tr, tr.times[1:], 1e-3)
    assert np.all(chi > 0)
    assert dynamical_fidelity_susceptibility(tr, 1.0) > 0


def test_susceptibility_rejects_bad_step(generic_params, squeezed):
    tr = evolve_trajectory(generic_params, squeezed, np.array([0.0]))
    with pytest.raises(ParameterError):
        susceptibility_batch(tr, np.array([1.0]), 0.0)


def test_susceptibility_unresolved_step_raises(generic_params, squeezed):
    tr = evolve_trajectory(generic_params, squeezed, np.array([0.0]))
    with pytest.raises(NumericalError, match="unresolved"):
        susceptibility_batch(tr, np.linspace(0.5, 3.0, 20), 1e-9)


# ----------------------------------------------------------------------------
# time averages


def test_abs_sin_average_at_default_sampling():
    spec = closed_form_spectrum(OscillatorParams(1.0, 1.3, 0.0, 0.0, 0.1, 0.1))
    window = default_window(spec)
    t = averaging_grid(window, default_samples(window, spec))
    k = spec.k_min_positive
    assert time_average(np.abs(np.sin(k * t)), t, spec) == pytest.approx(2 / math.pi, abs=1e-4)


def test_short_window_rejected(generic_params):
    spec = closed_form_spectrum(generic_params)
    t = averaging_grid(default_window(spec, periods=5), 10000)
    with pytest.raises(ParameterError, match="shorter than"):
        check_averaging_grid(t, spec)


def test_undersampled_window_rejected(generic_params):
    spec = closed_form_spectrum(generic_params)
    t = averaging_grid(default_window(spec), 100)
    with pytest.raises(ParameterError, match="undersample"):
        check_averaging_grid(t, spec)


def test_empty_average_rejected():
    with pytest.raises(ParameterError):
        time_average([])


def test_weak_coupling_prediction_scope():
    wc = weak_coupling_prediction(OscillatorParams.symmetric(1.0, 0.002))
    assert wc.lambda_p == pytest.approx(math.sqrt(2) * 0.002)
    assert wc.beat_period == pytest.approx(math.pi / (2 * math.sqrt(2) * 0.002))
    with pytest.raises(NotApplicableError):
        weak_coupling_prediction(OscillatorParams(1.0, 1.1, 0.0, 0.0, 0.002, 0.002))
    with pytest.raises(NotApplicableError):
        weak_coupling_prediction(OscillatorParams.symmetric(1.0, 0.2))


@pytest.mark.parametrize("g", [0.004, 0.002])
def test_weak_coupling_pt_spectrum_error_is_second_order(g):
    consts = []
    for gg in (g, g / 2):
        p = OscillatorParams.symmetric(1.0, gg)
        wc = weak_coupling_prediction(p)
        t = np.linspace(0.0, wc.beat_period, 2000)
        tr = evolve_trajectory(p, SqueezeSpec(), t, with_full=False)
        nu = symplectic_spectrum_batch(real_reduced(tr.reduced), transposed=True)
        pred = wc.pt_eigenvalues(t)
        err = max(float(np.max(np.abs(nu[k] - pred[k]))) for k in range(2))
        consts.append(err / wc.lambda_p**2)
    assert 0.5 <= consts[0] / consts[1] <= 2.0


# ----------------------------------------------------------------------------
# series


def test_measure_series(generic_params, squeezed):
    tr = evolve_trajectory(generic_params, squeezed, np.linspace(0, 10, 64), with_full=False)
    series = measure_series(tr, ("e_n", "discord", "fidelity", "chi_f"))
    assert series.fidelity[0] == pytest.approx(1.0, abs=1e-12)
    assert set(series.averages) == {"e_n", "discord", "fidelity", "chi_f"}
    assert series.averages["e_n"] == pytest.approx(float(np.mean(series.e_n)))
    direct = log_negativity_batch(real_reduced(tr.reduced))
    assert np.array_equal(series.e_n, direct)


def test_measure_series_unknown_quantity(generic_params):
    tr = evolve_trajectory(generic_params, SqueezeSpec(), np.linspace(0, 1, 4))
    with pytest.raises(ParameterError):
        measure_series(tr, ("purity",))


def test_measure_series_window_validation(generic_params):
    tr = evolve_trajectory(generic_params, SqueezeSpec(), np.linspace(0, 1, 4))
    with pytest.raises(ParameterError):
        measure_series(tr, ("e_n",), validate_window=True)
