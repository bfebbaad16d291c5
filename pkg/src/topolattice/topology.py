"""Winding numbers, PT-breaking thresholds and exceptional-point scans."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar
from scipy.stats import linregress

from .export import csv_text
from .lattice import LatticeSpec, build_chain_hamiltonian, off_diagonal
from .spectral import Spectrum, classify_modes, eigendecompose

INTEGER_TOL = 0.01
ALIGNMENT_MIN = 0.99
PREFILTER_OVERLAP = 0.5


class TopologyError(ValueError):
    pass


class OutOfDomainError(TopologyError):
    pass


@dataclass(frozen=True)
class EpReport:
    delta_gamma_c: float  # MHz
    normalized: float  # delta_gamma_c / (2 (v + w))
    mode_pair: tuple  # 1-based indices in the delta_gamma = 0 (or grid start) ordering
    kind: str  # "edge" | "bulk"


def _k_loop(n_k: int) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, n_k + 1)


def _phase_winding(values: np.ndarray) -> float:
    if np.any(np.abs(values) < 1e-12 * np.max(np.abs(values), initial=1.0)):
        raise TopologyError("curve passes through the origin: gapless (|v| = |w|) point")
    steps = np.angle(values[1:] / values[:-1])
    # h(k) = v + w exp(-ik) circles clockwise as k increases; count that as +1.
    return -steps.sum() / (2 * np.pi)


def _to_integer(raw: float, what: str) -> int:
    nearest = round(raw)
    if abs(raw - nearest) > INTEGER_TOL:
        raise TopologyError(f"{what} is not quantized: raw value {raw:.6f}")
    return int(nearest)


def winding_hermitian(spec: LatticeSpec, n_k: int = 256) -> int:
    """Winding of h(k) = v + w exp(-ik) around the origin over the zone."""
    if n_k < 64:
        raise ValueError("n_k must be >= 64")
    return _to_integer(_phase_winding(off_diagonal(spec, _k_loop(n_k))), "winding number")


def winding_generalized(spec: LatticeSpec, n_k: int = 256) -> int:
    """Integer winding of q(k) = sqrt(h(k) conj(h(-k)) - (dg/2)^2).

    q is tracked on a continuous branch by counting half the winding of
    its square, which never vanishes while dg/2 < |w - v|.
    """
    if n_k < 64:
        raise ValueError("n_k must be >= 64")
    half = 0.5 * spec.delta_gamma
    if not half < abs(spec.w - spec.v):
        raise OutOfDomainError(
            f"generalized winding defined only for dg/2 < |w-v| (dg/2={half:g}, |w-v|={abs(spec.w - spec.v):g})"
        )
    k = _k_loop(n_k)
    f = off_diagonal(spec, k) * np.conj(off_diagonal(spec, -k)) - half**2
    return _to_integer(0.5 * _phase_winding(f), "generalized winding number")


def bulk_sptb_threshold(spec: LatticeSpec) -> float:
    """Loss contrast at which the k = pi bulk pair coalesces: 2|w - v|."""
    return 2.0 * abs(spec.w - spec.v)


def _midgap_pair(spectrum: Spectrum, spec: LatticeSpec):
    offset = 1000.0 * (spectrum.reference_ghz - spec.omega0)
    values = spectrum.values + offset
    idx = np.argsort(np.abs(values.real), kind="stable")[:2]
    return values[idx], idx


def edge_sptb_threshold(spec: LatticeSpec, rtol: float = 1e-7) -> EpReport:
    """Bisect the loss contrast at which the mid-gap pair breaks PT symmetry.

    The mid-gap pair is the two central modes at zero contrast; both must
    lie inside the bulk gap |w - v| (short chains split the pair beyond the
    half-gap used for edge classification).  The mean loss is held fixed.
    A contrast counts as broken when the two mid-gap losses differ by more
    than 1e-6 (v + w).
    """
    if not spec.v < spec.w:
        raise TopologyError("edge modes need v < w")
    base = spec.with_contrast(0.0)
    values0, idx = _midgap_pair(eigendecompose(build_chain_hamiltonian(base), base), base)
    gap = abs(spec.w - spec.v)
    if np.any(np.abs(values0.real) >= gap):
        raise TopologyError(f"no mid-gap pair: central modes at {np.abs(values0.real).max():.4g} MHz >= gap {gap:g}")
    pair = tuple(sorted(int(i) + 1 for i in idx))
    tol = 1e-6 * (spec.v + spec.w)

    def broken(dg):
        s = base.with_contrast(dg)
        values, _ = _midgap_pair(eigendecompose(build_chain_hamiltonian(s), s), s)
        return abs(values[0].imag - values[1].imag) > tol

    # a pair at +-E coalesces at contrast 2E < 2|w - v|
    lo, hi = 0.0, 2.0 * gap
    if broken(lo):
        raise TopologyError("mid-gap pair already split in loss at zero contrast")
    if not broken(hi):
        raise TopologyError(f"mid-gap pair still unbroken at contrast {hi:g} MHz")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            hi = mid
        else:
            lo = mid
    dg_c = 0.5 * (lo + hi)
    return EpReport(dg_c, dg_c / (2 * (spec.v + spec.w)), pair, "edge")


@dataclass(frozen=True)
class ThresholdTable:
    n_cells: tuple
    delta_gamma_c: tuple
    slope: Optional[float] = None  # d ln(dg_c) / dN
    intercept: Optional[float] = None
    r_squared: Optional[float] = None

    def to_csv(self) -> str:
        r2 = "" if self.r_squared is None else self.r_squared
        return csv_text(
            ["n_cells", "delta_gamma_c_mhz", "r_squared"],
            [(n, dg, r2) for n, dg in zip(self.n_cells, self.delta_gamma_c)],
        )


def threshold_vs_length(spec: LatticeSpec, n_values: Sequence[int]) -> ThresholdTable:
    """Edge threshold for each chain length, with a fit of ln(dg_c) against N."""
    from dataclasses import replace

    n_values = [int(n) for n in n_values]
    if not n_values:
        raise ValueError("n_values is empty")
    if min(n_values) < 2:
        raise ValueError("every N must be >= 2")
    thresholds = []
    for n in n_values:
        try:
            thresholds.append(edge_sptb_threshold(replace(spec, n_cells=n)).delta_gamma_c)
        except (TopologyError, RuntimeError) as err:
            raise TopologyError(f"N={n}: {err}") from err
    if len(n_values) < 2:
        return ThresholdTable(tuple(n_values), tuple(thresholds))
    fit = linregress(n_values, np.log(thresholds))
    return ThresholdTable(
        tuple(n_values), tuple(thresholds), float(fit.slope), float(fit.intercept), float(fit.rvalue**2)
    )


def _scan_spectra(spec: LatticeSpec, grid, threads: int):
    def one(dg):
        s = spec.with_contrast(dg)
        return eigendecompose(build_chain_hamiltonian(s), s)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, grid))
    return [one(dg) for dg in grid]


def _track(spectra) -> np.ndarray:
    """labels[k, i]: grid-start mode (0-based) followed by eigenvalue i at grid point k."""
    n = len(spectra[0])
    labels = np.empty((len(spectra), n), dtype=int)
    labels[0] = np.arange(n)
    for k in range(1, len(spectra)):
        prev, cur = spectra[k - 1].values, spectra[k].values
        rows, cols = linear_sum_assignment(np.abs(prev[:, None] - cur[None, :]))
        labels[k, cols] = labels[k - 1, rows]
    return labels


def ep_scan(spec: LatticeSpec, delta_gamma_grid: Sequence[float], threads: int = 1) -> list:
    """Locate eigenvalue coalescences along a loss-contrast sweep at fixed mean loss.

    Candidates are interior local minima of the gap between two tracked
    modes; each is refined by a bounded scalar minimization of that gap and
    kept when the two unit eigenvectors overlap by at least 0.99.
    """
    grid = np.asarray(delta_gamma_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("delta_gamma grid needs at least 3 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("delta_gamma grid must be strictly ascending")
    base = spec.with_contrast(float(grid[0]))
    spectra = _scan_spectra(base, grid, threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        kinds = [m.kind for m in classify_modes(spectra[0]).modes]
    labels = _track(spectra)
    n = len(kinds)
    # tracked[k, a] = eigenvalue of grid-start mode a at grid point k
    tracked = np.empty((len(grid), n), dtype=complex)
    for k, s in enumerate(spectra):
        tracked[k, labels[k]] = s.values

    # overlaps[k, a, b] = |<phi_a, phi_b>| for tracked modes at grid point k
    vectors = np.stack([s.vectors[:, np.argsort(lab)] for s, lab in zip(spectra, labels)])
    overlaps = np.abs(np.einsum("kia,kib->kab", vectors.conj(), vectors))

    def gap_near(dg, centre):
        s = base.with_contrast(dg)
        values = np.linalg.eigvals(build_chain_hamiltonian(s).matrix)
        near = np.argsort(np.abs(values - centre))[:2]
        return abs(values[near[0]] - values[near[1]])

    reports = []
    scale = spec.v + spec.w
    for a, b in combinations(range(n), 2):
        d = np.abs(tracked[:, a] - tracked[:, b])
        for k in range(1, len(grid) - 1):
            if not (d[k] < d[k - 1] and d[k] <= d[k + 1]):
                continue
            # cheap rejection of avoided crossings between near-orthogonal modes
            if overlaps[k - 1 : k + 2, a, b].max() < PREFILTER_OVERLAP:
                continue
            centre = 0.5 * (tracked[k, a] + tracked[k, b])
            res = minimize_scalar(
                gap_near, bounds=(grid[k - 1], grid[k + 1]), args=(centre,), method="bounded",
                options={"xatol": 1e-10 * scale},
            )
            s = base.with_contrast(float(res.x))
            sp = eigendecompose(build_chain_hamiltonian(s), s)
            near = np.argsort(np.abs(sp.values - centre))[:2]
            overlap = abs(np.vdot(sp.modes[near[0]].amplitudes, sp.modes[near[1]].amplitudes))
            if overlap < ALIGNMENT_MIN:
                continue
            kind = "edge" if kinds[a] == "edge" and kinds[b] == "edge" else "bulk"
            reports.append(EpReport(float(res.x), float(res.x) / (2 * scale), (a + 1, b + 1), kind))
    reports.sort(key=lambda r: r.delta_gamma_c)
    return reports


def ep_reports_csv(reports) -> str:
    return csv_text(
        ["delta_gamma_mhz", "normalized", "kind", "mode_i", "mode_j"],
        [(r.delta_gamma_c, r.normalized, r.kind, r.mode_pair[0], r.mode_pair[1]) for r in reports],
    )
