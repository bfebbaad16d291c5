from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from topolattice import HERMITIAN_CHAIN, NON_HERMITIAN_CHAIN, LatticeSpec, bulk_bands, chain_spectrum
from topolattice.topology import (
    OutOfDomainError,
    TopologyError,
    bulk_sptb_threshold,
    edge_sptb_threshold,
    ep_reports_csv,
    ep_scan,
    threshold_vs_length,
    winding_generalized,
    winding_hermitian,
)

SWAPPED = LatticeSpec(6, 5.62, 24.42, 24.42, 341.0, 216.5)


def brute_winding(f_values):
    # independent oracle: total unwrapped argument change
    phase = np.unwrap(np.angle(f_values))
    return (phase[-1] - phase[0]) / (2 * np.pi)


@pytest.mark.parametrize(
    "spec, expected",
    [(HERMITIAN_CHAIN, 1), (SWAPPED, 0), (LatticeSpec(2, 5, 1, 1, 100, 0.0), 0), (NON_HERMITIAN_CHAIN, 1)],
)
def test_winding_hermitian(spec, expected):
    assert winding_hermitian(spec) == expected


@pytest.mark.parametrize("n_k", [64, 128, 256, 1024])
def test_winding_grid_independent(n_k):
    assert winding_hermitian(HERMITIAN_CHAIN, n_k) == winding_hermitian(HERMITIAN_CHAIN, 4 * n_k) == 1
    assert winding_generalized(NON_HERMITIAN_CHAIN, n_k) == winding_generalized(NON_HERMITIAN_CHAIN, 4 * n_k) == 1


def test_generalized_matches_dense_oracle():
    for spec, expected in [(NON_HERMITIAN_CHAIN, 1), (LatticeSpec(6, 5.48, 36, 73, 335.5, 208.5), 0)]:
        k = np.linspace(np.pi, -np.pi, 4097)
        h = spec.v + spec.w * np.exp(-1j * k)
        hm = spec.v + spec.w * np.exp(1j * k)
        raw = 0.5 * brute_winding(h * np.conj(hm) - (spec.delta_gamma / 2) ** 2)
        assert round(raw) == expected
        assert winding_generalized(spec) == expected


@given(st.floats(1, 500), st.floats(1, 500), st.floats(0, 100))
def test_generalized_reduces_to_hermitian(v, w, g):
    if abs(v - w) < 1e-3 * (v + w):
        return
    spec = LatticeSpec(3, 5.0, g, g, v, w)
    assert winding_generalized(spec) == winding_hermitian(spec) == (1 if v < w else 0)


def test_generalized_out_of_domain():
    spec = LatticeSpec(6, 5.48, 0, 300, 208.5, 335.5)
    with pytest.raises(OutOfDomainError):
        winding_generalized(spec)


def test_winding_rejects_small_grid_and_gapless_point():
    with pytest.raises(ValueError):
        winding_hermitian(HERMITIAN_CHAIN, 32)
    with pytest.raises(TopologyError):
        winding_hermitian(LatticeSpec(2, 5, 1, 1, 200, 200), 64)


def test_bulk_threshold():
    assert bulk_sptb_threshold(NON_HERMITIAN_CHAIN) == 254.0
    assert bulk_sptb_threshold(LatticeSpec(2, 5, 1, 1, 200, 200)) == 0.0
    s = NON_HERMITIAN_CHAIN.with_contrast(254.0)
    lo, hi = bulk_bands(s, np.pi)
    assert abs(hi - lo) < 1e-5


def test_edge_threshold_six_cells():
    rep = edge_sptb_threshold(NON_HERMITIAN_CHAIN)
    assert rep.kind == "edge" and rep.mode_pair == (6, 7)
    assert rep.normalized == pytest.approx(0.02, abs=0.005)
    assert rep.delta_gamma_c < bulk_sptb_threshold(NON_HERMITIAN_CHAIN)


def test_edge_threshold_equals_hermitian_splitting():
    sp = chain_spectrum(NON_HERMITIAN_CHAIN.with_contrast(0.0))
    split = abs(sp[7].value.real - sp[6].value.real)
    assert edge_sptb_threshold(NON_HERMITIAN_CHAIN).delta_gamma_c == pytest.approx(split, rel=0.05)


def test_shorter_chain_needs_more_contrast():
    long = edge_sptb_threshold(NON_HERMITIAN_CHAIN).normalized
    short = edge_sptb_threshold(replace(NON_HERMITIAN_CHAIN, n_cells=2)).normalized
    assert short > long


@given(st.floats(0, 200))
def test_edge_threshold_shift_invariant(c):
    s = NON_HERMITIAN_CHAIN
    shifted = replace(s, gamma_a=s.gamma_a + c, gamma_b=s.gamma_b + c)
    a, b = edge_sptb_threshold(s).delta_gamma_c, edge_sptb_threshold(shifted).delta_gamma_c
    assert b == pytest.approx(a, rel=1e-6)


@pytest.mark.parametrize("excess", [1e-3, 0.1, 5.0])
def test_losses_split_symmetrically_above_threshold(excess):
    dg = edge_sptb_threshold(NON_HERMITIAN_CHAIN).delta_gamma_c + excess
    sp = chain_spectrum(NON_HERMITIAN_CHAIN.with_contrast(dg))
    lo, hi = (m.loss_mhz for m in sp.edge_modes())
    assert 0.5 * (lo + hi) == pytest.approx(54.5, abs=1e-6 * 544)


def test_edge_threshold_errors():
    with pytest.raises(TopologyError):
        edge_sptb_threshold(SWAPPED)


def test_threshold_scaling():
    table = threshold_vs_length(NON_HERMITIAN_CHAIN, range(3, 11))
    dg = np.array(table.delta_gamma_c)
    assert np.all(np.diff(dg) < 0)
    assert table.slope < 0 and table.r_squared > 0.99
    ratios = dg[1:] / dg[:-1]
    np.testing.assert_allclose(ratios, 208.5 / 335.5, rtol=0.15)


def test_threshold_single_length():
    table = threshold_vs_length(NON_HERMITIAN_CHAIN, [4])
    assert len(table.n_cells) == 1 and table.r_squared is None


def test_threshold_rejects_short_chain():
    with pytest.raises(ValueError):
        threshold_vs_length(NON_HERMITIAN_CHAIN, [1, 2])


def test_threshold_error_names_length():
    with pytest.raises(TopologyError, match="N=3"):
        threshold_vs_length(SWAPPED, [3, 4])


def test_threshold_csv():
    lines = threshold_vs_length(NON_HERMITIAN_CHAIN, [3, 4]).to_csv().splitlines()
    assert lines[0] == "n_cells,delta_gamma_c_mhz,r_squared"
    assert len(lines) == 3


def test_ep_scan_cascade():
    grid = np.linspace(0, 0.5 * 2 * 544, 301)
    reports = ep_scan(NON_HERMITIAN_CHAIN, grid)
    assert reports[0].kind == "edge"
    assert reports[0].normalized == pytest.approx(0.02, abs=0.005)
    assert len(reports) > 1 and all(r.kind == "bulk" for r in reports[1:])
    ref = edge_sptb_threshold(NON_HERMITIAN_CHAIN).delta_gamma_c
    assert reports[0].delta_gamma_c == pytest.approx(ref, abs=grid[1] - grid[0])


def test_ep_scan_empty_below_first_point():
    assert ep_scan(NON_HERMITIAN_CHAIN, np.linspace(0, 0.01 * 2 * 544, 21)) == []


@pytest.mark.parametrize("grid", [[0, 1], [0, 2, 1], [[0, 1, 2]]])
def test_ep_scan_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        ep_scan(NON_HERMITIAN_CHAIN, grid)


def test_ep_scan_threads_agree():
    grid = np.linspace(0, 100, 51)
    assert ep_scan(NON_HERMITIAN_CHAIN, grid) == ep_scan(NON_HERMITIAN_CHAIN, grid, threads=4)


def test_ep_csv():
    reports = ep_scan(NON_HERMITIAN_CHAIN, np.linspace(0, 100, 51))
    lines = ep_reports_csv(reports).splitlines()
    assert lines[0] == "delta_gamma_mhz,normalized,kind,mode_i,mode_j"
    assert lines[1].split(",")[2:] == ["edge", "6", "7"]
