import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from topolattice import HERMITIAN_CHAIN, NON_HERMITIAN_CHAIN, LatticeSpec, chain_spectrum
from topolattice.fitting import (
    FitError,
    FitResult,
    extract_linewidth,
    find_peaks,
    fit_level_repulsion,
    initial_guess,
    branches_from_map,
)
from topolattice.magnon import MagnonSpec, effective_coupling, two_mode_hybrid
from topolattice.scattering import PortConfig, s_matrix, transmission_map
from topolattice.spectral import pdos

C0, C1 = 5.0, 0.1


def lorentzian(x, centre, fwhm, height=1.0):
    hw = 0.5 * fwhm
    return height * hw**2 / ((x - centre) ** 2 + hw**2)


def test_single_lorentzian():
    x = np.arange(5.0, 6.0, 0.001)
    (peak,) = find_peaks(x, lorentzian(x, 5.48, 0.080))
    assert abs(peak.center - 5.48) < 0.5e-3
    assert peak.fwhm == pytest.approx(0.080, rel=0.02)
    assert peak.height == pytest.approx(1.0, rel=1e-3)


@given(st.floats(5.2, 5.8), st.floats(0.01, 0.2), st.floats(1e-6, 1e6))
def test_centres_scale_invariant(centre, fwhm, scale):
    x = np.arange(5.0, 6.0, 0.0007)
    y = lorentzian(x, centre, fwhm) + lorentzian(x, centre + 0.15, fwhm / 2, 0.5)
    a = [p.center for p in find_peaks(x, y)]
    b = [p.center for p in find_peaks(x, scale * y)]
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_flat_trace_has_no_peaks():
    x = np.linspace(5, 6, 100)
    assert find_peaks(x, np.ones(100)) == []
    assert find_peaks(x, np.zeros(100)) == []


def test_peak_input_errors():
    with pytest.raises(FitError):
        find_peaks([], [])
    with pytest.raises(FitError):
        find_peaks(np.arange(10.0), np.ones(10))
    with pytest.raises(FitError):
        find_peaks(np.r_[np.linspace(0, 1, 20), 5.0], np.ones(21))


def test_missing_half_height_is_nan():
    # a plateau on the left never falls to half height
    x = np.linspace(5.0, 5.1, 51)
    (peak,) = find_peaks(x, lorentzian(x, 5.05, 0.01) + 0.9 * (x < 5.049))
    assert np.isnan(peak.fwhm)


def test_hermitian_chain_peak_count():
    omegas = np.arange(4.9, 6.35, 0.0005)
    s21 = np.abs(s_matrix(HERMITIAN_CHAIN, PortConfig(20, 20), omegas)[:, 1, 0]) ** 2
    peaks = find_peaks(omegas, s21, prominence=1e-3)
    # 12 modes: the 28 MHz edge doublet and the 47 MHz pairs at both band edges
    # each fall inside one resonance of width 2 (24.4 + loading)
    assert len(peaks) == 7
    assert sum(abs(p.center - 5.62) < 0.02 for p in peaks) == 1


def synthetic_branches(g, omega_m, loss_m, gamma_n, n=40, span=5.0, noise=0.0, rng=None):
    # currents sweep the magnon across omega_m by +- span * g
    wm_mhz = 1000 * (omega_m - C0)
    centre = wm_mhz / (1000 * C1)
    currents = centre + np.linspace(-span * g, span * g, n) / (1000 * C1)
    wn = 1000 * C1 * currents - 1j * gamma_n
    up, lo = two_mode_hybrid(wn, wm_mhz - 1j * loss_m, g)
    up, lo = up.real, lo.real
    if noise:
        up = up + rng.normal(0, noise, n)
        lo = lo + rng.normal(0, noise, n)
    return (currents, C0 + up / 1000), (currents, C0 + lo / 1000)


@given(st.floats(20, 150), st.floats(5.3, 5.7), st.floats(1, 80), st.floats(0, 5))
def test_round_trip_zero_noise(g, omega_m, loss_m, gamma_n):
    if abs(loss_m - gamma_n) >= 2 * g:
        return
    branches = synthetic_branches(g, omega_m, loss_m, gamma_n)
    init = initial_guess(branches, (C0, C1), loss_m, gamma_n)
    fit = fit_level_repulsion(branches, (C0, C1), init)
    assert fit.converged
    assert fit.g == pytest.approx(g, rel=0.01)
    assert fit.omega_m == pytest.approx(omega_m, abs=1e-6)


def test_strong_coupling_with_noise():
    rng = np.random.default_rng(7)
    g = 112.0
    branches = synthetic_branches(g, 5.48, 40.42, 1.0, noise=0.01 * g, rng=rng)
    fit = fit_level_repulsion(branches, (C0, C1), initial_guess(branches, (C0, C1), 40.42, 1.0))
    assert fit.g == pytest.approx(g, rel=0.01)
    assert fit.flags == ()


def test_label_exchange_invariance():
    up, lo = synthetic_branches(80.0, 5.5, 20.0, 1.0, noise=0.5, rng=np.random.default_rng(1))
    init = initial_guess((up, lo), (C0, C1), 20.0, 1.0)
    a = fit_level_repulsion((up, lo), (C0, C1), init)
    b = fit_level_repulsion((lo, up), (C0, C1), init)
    assert a.residual == b.residual and a.g == b.g


def test_deterministic():
    branches = synthetic_branches(60.0, 5.5, 10.0, 1.0, noise=0.3, rng=np.random.default_rng(3))
    assert fit_level_repulsion(branches, (C0, C1)) == fit_level_repulsion(branches, (C0, C1))


def test_uncoupled_crossing_flagged():
    rng = np.random.default_rng(11)
    currents = np.linspace(3.0, 7.0, 40)
    wn = 1000 * (C0 + C1 * currents - 5.5)
    a = np.maximum(wn, 0.0) + rng.normal(0, 0.5, 40)
    b = np.minimum(wn, 0.0) + rng.normal(0, 0.5, 40)
    fit = fit_level_repulsion(((currents, 5.5 + a / 1000), (currents, 5.5 + b / 1000)), (C0, C1))
    assert fit.g < 3 * 0.5
    assert "weak-identifiability" in fit.flags


def test_far_apart_branches_flagged():
    currents = np.linspace(0, 1, 10)
    up = (currents, np.full(10, 5.9))
    lo = (currents, np.full(10, 5.1))
    fit = fit_level_repulsion((up, lo), (C0, C1), FitResult(g=10.0, omega_m=5.5, loss_m_total=0.0, gamma_n=0.0))
    assert "no-anticrossing" in fit.flags


def test_free_magnon_loss_stays_in_bounds():
    branches = synthetic_branches(50.0, 5.5, 30.0, 3.0)
    init = initial_guess(branches, (C0, C1), 30.0, 3.0)
    fit = fit_level_repulsion(branches, (C0, C1), init, free_gamma_n=True, gamma_n_max=10.0)
    assert 0 <= fit.gamma_n <= 10.0
    assert fit.g == pytest.approx(50.0, rel=0.01)


@pytest.mark.parametrize("n", [0, 3, 5])
def test_too_few_points(n):
    c = np.linspace(0, 1, n)
    with pytest.raises(FitError):
        fit_level_repulsion(((c, c + 5.5), (c, c + 5.4)), (C0, C1))
    with pytest.raises(FitError):
        initial_guess(((c, c + 5.5), (c, c + 5.4)), (C0, C1))


def test_fit_result_json_keys():
    doc = json.loads(FitResult(1.0, 5.5, 2.0, 0.5).to_json())
    assert set(doc) == {"g_mhz", "omega_m_ghz", "loss_m_mhz", "gamma_n_mhz", "residual", "converged"}


def test_end_to_end_isolated_mode():
    # short, well separated chain so the chosen mode is a genuine two-mode problem
    spec = LatticeSpec(2, 5.5, 2.0, 2.0, 200.0, 300.0)
    ports = PortConfig(2.0, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sp = chain_spectrum(spec)
    mode = sp[3]
    mag = MagnonSpec(1, 20.0, 2.0, C0, C1)
    centre = mag.current_for(mode.re_ghz)
    currents = np.linspace(centre - 0.5, centre + 0.5, 51)
    omegas = np.arange(mode.re_ghz - 0.1, mode.re_ghz + 0.1, 0.0002)
    tmap = transmission_map(spec, mag, ports, currents, omegas)
    branches = branches_from_map(tmap, (mode.re_ghz - 0.06, mode.re_ghz + 0.06))
    p = pdos(mode)
    loss_m = mode.loss_mhz + 2.0 * p[0] + 2.0 * p[-1]
    fit = fit_level_repulsion(branches, mag, initial_guess(branches, mag, loss_m, 2.0))
    assert fit.g == pytest.approx(effective_coupling(sp, 3, 1, 20.0), rel=0.05)


def test_linewidth_extrinsic_only():
    spec = LatticeSpec(1, 5.5, 0.0, 0.0, 0.0, 0.0)
    ports = PortConfig(3.0, 4.0, 1, 1)
    mag = MagnonSpec(2, 0.0, 1.0, 4.0, 0.1)
    tmap = transmission_map(spec, mag, ports, [0.0, 1.0], np.arange(5.4, 5.6, 0.0001))
    assert extract_linewidth(tmap, 0, 0.5) == pytest.approx(7.0, rel=0.02)
    assert extract_linewidth(tmap, 5.5, 1.0) == pytest.approx(7.0, rel=0.02)


def test_linewidth_site_dependence():
    # magnon resonant with the broken edge pair: hybrid width follows the local edge loss
    ports = PortConfig(2.0, 2.0)
    omegas = np.arange(5.2, 5.76, 0.0002)
    widths = []
    for site in (1, 12):
        mag = MagnonSpec(site, 90.0, 1.0, 5.08, 0.1)
        tmap = transmission_map(NON_HERMITIAN_CHAIN, mag, ports, [4.0], omegas)
        widths.append(extract_linewidth(tmap, 5.41, 4.0))
    assert widths[1] > widths[0] + 10


def test_far_detuned_edge_width_independent_of_site():
    ports = PortConfig(2.0, 2.0)
    omegas = np.arange(5.2, 5.76, 0.0002)
    widths = []
    for site in (1, 12):
        mag = MagnonSpec(site, 143.0, 1.0, 3.0, 0.1)
        tmap = transmission_map(NON_HERMITIAN_CHAIN, mag, ports, [0.0], omegas)
        widths.append(extract_linewidth(tmap, 5.48, 0.0))
    assert widths[0] == pytest.approx(widths[1], rel=0.01)


def test_linewidth_errors():
    mag = MagnonSpec(1, 0.0, 1.0, 4.0, 0.1)
    tmap = transmission_map(HERMITIAN_CHAIN, mag, PortConfig(20, 20), [0.0, 1.0], np.arange(5.0, 6.2, 0.001))
    with pytest.raises(FitError):
        extract_linewidth(tmap, 0, 2.0)
    with pytest.raises(FitError):
        extract_linewidth(tmap, 40, 0.5)
