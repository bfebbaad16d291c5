"""Peak extraction and anticrossing fits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks as _scipy_find_peaks

from .magnon import MagnonSpec, two_mode_hybrid
from .scattering import TransmissionMap

MIN_SAMPLES = 16
MAX_NFEV = 200
STEP_TOL = 1e-10


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class Peak:
    center: float
    fwhm: float  # nan when a half-height crossing is missing
    height: float


def find_peaks(omegas, trace, prominence: float = 0.05) -> list:
    """Resonances in a sampled, uniformly spaced trace.

    Maxima must stand out by ``prominence`` times the global maximum.  Each
    centre and height come from a parabola through the three samples
    around the maximum on log amplitude; the FWHM is read off by linear
    interpolation at half the refined height.
    """
    x = np.asarray(omegas, dtype=float)
    y = np.asarray(trace, dtype=float)
    if y.size == 0:
        raise FitError("empty trace")
    if y.size < MIN_SAMPLES or x.shape != y.shape:
        raise FitError(f"need >= {MIN_SAMPLES} samples on matching grids")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0):
        raise FitError("frequency grid is not uniform")
    top = y.max()
    if not top > 0:
        return []
    idx, _ = _scipy_find_peaks(y, prominence=prominence * top)
    peaks = []
    for i in idx:
        if i < 1 or i > y.size - 2:
            raise FitError(f"maximum at sample {i} lacks neighbours for refinement")
        yl, yc, yr = y[i - 1 : i + 2]
        if min(yl, yc, yr) > 0:
            l, c, r = np.log([yl, yc, yr])
            curv = l - 2 * c + r
            shift = 0.5 * (l - r) / curv if curv < 0 else 0.0
            height = np.exp(c - 0.25 * (l - r) * shift)
        else:
            curv = yl - 2 * yc + yr
            shift = 0.5 * (yl - yr) / curv if curv < 0 else 0.0
            height = yc - 0.25 * (yl - yr) * shift
        center = x[i] + shift * dx[0]
        peaks.append(Peak(float(center), _fwhm(x, y, i, 0.5 * height), float(height)))
    return peaks


def _fwhm(x, y, i, half) -> float:
    left = i
    while left > 0 and y[left] >= half:
        left -= 1
    right = i
    while right < y.size - 1 and y[right] >= half:
        right += 1
    if y[left] >= half or y[right] >= half:
        return float("nan")
    xl = np.interp(half, [y[left], y[left + 1]], [x[left], x[left + 1]])
    xr = np.interp(half, [y[right], y[right - 1]], [x[right], x[right - 1]])
    return float(xr - xl)


@dataclass(frozen=True)
class FitResult:
    g: float  # MHz
    omega_m: float  # GHz
    loss_m_total: float  # MHz, intrinsic + extrinsic
    gamma_n: float  # MHz
    residual: float = 0.0  # rms of branch residuals, MHz
    covariance_diag: dict = field(default_factory=dict)
    converged: bool = True
    flags: tuple = ()
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "g_mhz": self.g,
            "omega_m_ghz": self.omega_m,
            "loss_m_mhz": self.loss_m_total,
            "gamma_n_mhz": self.gamma_n,
            "residual": self.residual,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _frequency_map(magnon_map):
    if isinstance(magnon_map, MagnonSpec):
        return magnon_map.frequency
    c0, c1 = magnon_map
    return lambda i: c0 + c1 * np.asarray(i, dtype=float)


def _min_gap(upper, lower) -> float:
    # lower branch interpolated onto the upper branch currents
    order = np.argsort(lower[0])
    other = np.interp(upper[0], lower[0][order], lower[1][order])
    return float(np.min(np.abs(upper[1] - other)))


def _check_branches(branches) -> tuple:
    # (upper, lower) ordered by mean frequency
    if len(branches) != 2:
        raise FitError("need exactly two branches")
    data = [tuple(np.asarray(a, dtype=float) for a in b) for b in branches]
    for cur, freq in data:
        if cur.shape != freq.shape or cur.size < 6:
            raise FitError(f"each branch needs >= 6 (current, frequency) points, got {cur.size}")
    if data[0][1].mean() < data[1][1].mean():
        data = data[::-1]
    return tuple(data)


def initial_guess(branches: Sequence, magnon_map, loss_m_total: float = 0.0, gamma_n: float = 0.0) -> FitResult:
    """Starting point read off the data.

    g is half the smallest branch gap; omega_m averages the flat asymptotes
    (upper branch where the magnon is far below, lower branch where it is
    far above).  Losses are passed through unchanged.
    """
    data = _check_branches(branches)
    upper, lower = data
    freq_of = _frequency_map(magnon_map)
    rising = float(np.diff(freq_of([0.0, 1.0]))[0]) > 0
    lo_i, hi_i = (np.argmin, np.argmax) if rising else (np.argmax, np.argmin)
    omega_m = 0.5 * (upper[1][lo_i(upper[0])] + lower[1][hi_i(lower[0])])
    return FitResult(
        g=500.0 * _min_gap(upper, lower), omega_m=float(omega_m), loss_m_total=loss_m_total, gamma_n=gamma_n
    )


def fit_level_repulsion(
    branches: Sequence,
    magnon_map: Union[MagnonSpec, tuple],
    init: Optional[FitResult] = None,
    free_gamma_n: bool = False,
    gamma_n_max: float = 1e3,
) -> FitResult:
    """Least-squares fit of the two-mode hybrid to measured branch positions.

    ``branches`` holds two (currents, peak frequencies in GHz) pairs; which
    one is the upper branch is decided from their means, so the labels are
    interchangeable.  Only real parts are fitted.  The chain-mode loss is
    held at its initial value; the magnon loss is held too unless
    ``free_gamma_n`` is set, since real parts only constrain their
    difference.
    """
    upper, lower = _check_branches(branches)
    freq_of = _frequency_map(magnon_map)
    ref = float(np.mean(np.concatenate([upper[1], lower[1]])))

    def mhz(ghz):
        return 1000.0 * (np.asarray(ghz) - ref)

    gap = 1000.0 * _min_gap(upper, lower)
    if init is None:
        init = initial_guess(branches, magnon_map)

    wn_up, wn_lo = mhz(freq_of(upper[0])), mhz(freq_of(lower[0]))
    y = np.concatenate([mhz(upper[1]), mhz(lower[1])])

    def unpack(p):
        gamma_n = p[2] if free_gamma_n else init.gamma_n
        return p[0], p[1], gamma_n

    def residuals(p):
        g, wm, gamma_n = unpack(p)
        wm_t = wm - 1j * init.loss_m_total
        up, _ = two_mode_hybrid(wn_up - 1j * gamma_n, wm_t, g)
        _, lo = two_mode_hybrid(wn_lo - 1j * gamma_n, wm_t, g)
        return np.concatenate([up.real, lo.real]) - y

    p0 = [max(init.g, 1e-6), float(mhz(init.omega_m)), init.gamma_n]
    lb, ub = [0.0, -np.inf, 0.0], [np.inf, np.inf, gamma_n_max]
    if free_gamma_n:
        p0[2] = float(np.clip(p0[2], 0.0, gamma_n_max))
    else:
        p0, lb, ub = p0[:2], lb[:2], ub[:2]
    res = least_squares(
        residuals, p0, bounds=(lb, ub), method="trf", xtol=STEP_TOL, ftol=1e-12, gtol=1e-12, max_nfev=MAX_NFEV
    )
    g, wm, gamma_n = unpack(res.x)
    n_obs, n_par = y.size, res.x.size
    rms = float(np.sqrt(np.mean(res.fun**2)))
    names = ["g", "omega_m", "gamma_n"][:n_par]
    try:
        dof = max(n_obs - n_par, 1)
        cov = np.linalg.pinv(res.jac.T @ res.jac) * (2 * res.cost / dof)
        cov_diag = {k: float(v) for k, v in zip(names, np.diag(cov))}
    except np.linalg.LinAlgError:
        cov_diag = {k: float("nan") for k in names}

    flags = []
    sigma_g = np.sqrt(cov_diag.get("g", np.nan))
    if g <= max(2 * sigma_g, rms) or not np.isfinite(sigma_g):
        flags.append("weak-identifiability")
    if gap > 4 * g:
        flags.append("no-anticrossing")
    converged = res.status > 0
    if not converged:
        flags.append("not-converged")
    return FitResult(
        g=float(g),
        omega_m=ref + float(wm) / 1000.0,
        loss_m_total=init.loss_m_total,
        gamma_n=float(gamma_n),
        residual=rms,
        covariance_diag=cov_diag,
        converged=converged,
        flags=tuple(flags),
        message=f"{res.message} (rms residual {rms:.3g} MHz after {res.nfev} evaluations)",
    )


def branches_from_map(tmap: TransmissionMap, window_ghz: tuple, prominence: float = 0.05) -> tuple:
    """Upper and lower branch positions from the two strongest peaks per row inside a window.

    Rows where fewer than two peaks are resolved are skipped.
    """
    lo, hi = window_ghz
    upper, lower = ([], []), ([], [])
    for k, current in enumerate(tmap.currents):
        peaks = [p for p in find_peaks(tmap.omegas, tmap.s21_sq[k], prominence) if lo <= p.center <= hi]
        if len(peaks) < 2:
            continue
        two = sorted(sorted(peaks, key=lambda p: -p.height)[:2], key=lambda p: p.center)
        lower[0].append(current)
        lower[1].append(two[0].center)
        upper[0].append(current)
        upper[1].append(two[1].center)
    return (np.array(upper[0]), np.array(upper[1])), (np.array(lower[0]), np.array(lower[1]))


def extract_linewidth(tmap: TransmissionMap, branch: Union[int, float], at_current: float) -> float:
    """Half width at half maximum (MHz) of one resonance in the |S21|^2 cut nearest ``at_current``.

    ``branch`` is an int (peak order, ascending frequency) or a float
    frequency in GHz (nearest peak).
    """
    currents = tmap.currents
    if not currents.min() <= at_current <= currents.max():
        raise FitError(f"current {at_current} A outside the map grid")
    k = int(np.argmin(np.abs(currents - at_current)))
    peaks = find_peaks(tmap.omegas, tmap.s21_sq[k])
    if isinstance(branch, (int, np.integer)) and not isinstance(branch, bool):
        if not 0 <= branch < len(peaks):
            raise FitError(f"branch {branch} not resolvable: {len(peaks)} peaks at {currents[k]} A")
        peak = peaks[branch]
    else:
        if not peaks:
            raise FitError(f"no peaks at {currents[k]} A")
        peak = min(peaks, key=lambda p: abs(p.center - branch))
    if not np.isfinite(peak.fwhm):
        raise FitError(f"peak at {peak.center:.6f} GHz has no half-height crossing")
    return 500.0 * peak.fwhm
