"""A single magnon mode attached to one chain site."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.constants import hbar
from scipy.optimize import linear_sum_assignment

from .export import csv_text
from .lattice import Hamiltonian, LatticeSpec, build_chain_hamiltonian
from .spectral import Spectrum, eigendecompose, pdos

MAGNON_KEYS = ("site", "g0_mhz", "gamma_n_mhz", "c0_ghz", "c1_ghz_per_a")


@dataclass(frozen=True)
class MagnonSpec:
    """Magnon attached to ``site`` (1-based) with bare coupling ``g0``.

    Frequency follows omega_n(I) = c0 + c1 * I (GHz, current in A); a fixed
    frequency is c1 = 0.
    """

    site: int
    g0: float
    gamma_n: float
    c0: float
    c1: float = 0.0

    def __post_init__(self):
        if int(self.site) != self.site or self.site < 1:
            raise ValueError(f"site must be a positive integer, got {self.site!r}")
        object.__setattr__(self, "site", int(self.site))
        if self.g0 < 0:
            raise ValueError("g0 must be >= 0")
        if self.gamma_n < 0:
            raise ValueError("gamma_n must be >= 0")

    def frequency(self, current):
        return self.c0 + self.c1 * np.asarray(current, dtype=float)

    def current_for(self, omega_ghz: float) -> float:
        if self.c1 == 0:
            raise ValueError("frequency map is flat (c1 = 0)")
        return (omega_ghz - self.c0) / self.c1

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "g0_mhz": self.g0,
            "gamma_n_mhz": self.gamma_n,
            "c0_ghz": self.c0,
            "c1_ghz_per_a": self.c1,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MagnonSpec":
        unknown = set(data) - set(MAGNON_KEYS)
        if unknown:
            raise ValueError(f"unknown magnon keys: {sorted(unknown)}")
        missing = set(MAGNON_KEYS[:4]) - set(data)
        if missing:
            raise ValueError(f"missing magnon keys: {sorted(missing)}")
        return cls(
            site=data["site"],
            g0=float(data["g0_mhz"]),
            gamma_n=float(data["gamma_n_mhz"]),
            c0=float(data["c0_ghz"]),
            c1=float(data.get("c1_ghz_per_a", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MagnonSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PhysicalCouplingParams:
    eta: float  # mode overlap / polarization matching, 0 < eta <= 1
    chi: float  # gyromagnetic ratio
    n_spins: float
    spin_s: float = 2.5
    omega_r: float = 1.0  # resonance angular frequency
    mode_volume: float = 1.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        for name in ("chi", "n_spins", "spin_s", "omega_r", "mode_volume"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def g_from_physical(params: PhysicalCouplingParams, calibration: float) -> float:
    """g0 = calibration * eta * chi * sqrt(n S hbar omega_r / 2V)."""
    if not calibration > 0:
        raise ValueError("calibration must be positive")
    p = params
    return calibration * p.eta * p.chi * np.sqrt(p.n_spins * p.spin_s * hbar * p.omega_r / (2 * p.mode_volume))


def build_coupled_hamiltonian(H: Hamiltonian, magnon: MagnonSpec, omega_n: float) -> Hamiltonian:
    """Append the magnon as the last row/column; ``omega_n`` in GHz."""
    n = H.dim
    if not 1 <= magnon.site <= n:
        raise ValueError(f"magnon site {magnon.site} outside 1..{n}")
    out = np.zeros((n + 1, n + 1), dtype=complex)
    out[:n, :n] = H.matrix
    out[n, n] = 1000.0 * (omega_n - H.reference_ghz) - 1j * magnon.gamma_n
    out[n, magnon.site - 1] = out[magnon.site - 1, n] = magnon.g0
    return Hamiltonian(out, H.reference_ghz)


def two_mode_hybrid(omega_n_t, omega_m_t, g):
    """Hybrid eigenfrequencies (upper, lower) of two linearly coupled modes.

    Inputs are complex frequencies (real part minus i*loss) and a coupling
    in the same units; arrays broadcast.  A real coupling must be >= 0; a
    complex one (see :func:`biorthogonal_coupling`) enters only through
    g**2.  The principal root keeps Re(upper) >= Re(lower) when the
    detuning dominates.
    """
    g = np.asarray(g)
    if np.isrealobj(g) and np.any(g < 0):
        raise ValueError("g must be >= 0")
    omega_n_t = np.asarray(omega_n_t, dtype=complex)
    omega_m_t = np.asarray(omega_m_t, dtype=complex)
    root = np.sqrt((omega_n_t - omega_m_t) ** 2 + 4 * g**2)
    mean = omega_n_t + omega_m_t
    return 0.5 * (mean + root), 0.5 * (mean - root)


def effective_coupling(spectrum: Spectrum, m: int, s: int, g0: float) -> float:
    """g_{m,s} = g0 |phi_{m,s}| for mode m (1-based) and site s (1-based)."""
    return float(g0 * abs(spectrum[m].amplitudes[s - 1]))


def biorthogonal_coupling(spectrum: Spectrum, m: int, s: int, g0: float) -> complex:
    """Exact first-order coupling of mode m to a magnon on site s.

    For a complex-symmetric chain the left eigenvector is the transpose of
    the right one, so the projected coupling squared is
    g0**2 phi_s**2 / (phi^T phi).  Equals effective_coupling up to a phase
    when the mode is real (Hermitian chains).
    """
    phi = spectrum[m].amplitudes
    return complex(g0 * phi[s - 1] / np.sqrt(phi @ phi))


def edge_linewidth(spectrum: Spectrum, s: int) -> float:
    """PDOS-weighted loss of the two edge modes seen at site s (MHz)."""
    edges = spectrum.edge_modes()
    if len(edges) != 2:
        raise ValueError(f"need exactly two classified edge modes, found {len(edges)}")
    weights = np.array([pdos(mode)[s - 1] for mode in edges])
    losses = np.array([mode.loss_mhz for mode in edges])
    return float(weights @ losses / weights.sum())


@dataclass(frozen=True)
class SweepTraces:
    """Branch-tracked eigenvalues of the magnon-augmented chain.

    ``values[k, b]`` is branch b at ``currents[k]`` (MHz offset from
    ``reference_ghz``).  ``ambiguous`` lists (k, b) points where the
    overlap-based labeling was not clear-cut.
    """

    currents: np.ndarray
    values: np.ndarray
    reference_ghz: float
    ambiguous: tuple = ()

    def re_ghz(self) -> np.ndarray:
        return self.reference_ghz + self.values.real / 1000.0

    def loss_mhz(self) -> np.ndarray:
        return -self.values.imag

    def to_csv(self) -> str:
        re, loss = self.re_ghz(), self.loss_mhz()
        rows = [
            (float(i), b, float(re[k, b]), float(loss[k, b]))
            for k, i in enumerate(self.currents)
            for b in range(self.values.shape[1])
        ]
        return csv_text(["current_a", "branch", "re_ghz", "loss_mhz"], rows)


AMBIGUITY_MARGIN = 0.1


def anticrossing_sweep(
    spec: LatticeSpec, magnon: MagnonSpec, currents: Sequence[float], H: Optional[Hamiltonian] = None
) -> SweepTraces:
    """Diagonalize the coupled chain at every current and link branches.

    Branches are linked between neighbouring currents by maximal eigenvector
    overlap.  A link whose overlap beats the runner-up by less than
    AMBIGUITY_MARGIN is reported in ``ambiguous`` instead of being trusted.
    """
    currents = np.asarray(currents, dtype=float)
    if currents.ndim != 1 or len(currents) == 0:
        raise ValueError("currents must be a nonempty 1-D grid")
    if len(currents) > 1 and magnon.c1 == 0:
        raise ValueError("sweeping current needs a frequency map with c1 != 0")
    if H is None:
        H = build_chain_hamiltonian(spec)
    values, vectors = [], []
    for i in currents:
        sp = eigendecompose(build_coupled_hamiltonian(H, magnon, float(magnon.frequency(i))))
        values.append(sp.values)
        vectors.append(sp.vectors)

    n = len(values[0])
    out = np.empty((len(currents), n), dtype=complex)
    out[0] = values[0]
    prev_vec = vectors[0]
    ambiguous = []
    for k in range(1, len(currents)):
        overlap = np.abs(prev_vec.conj().T @ vectors[k])  # [branch, new eigen]
        rows, cols = linear_sum_assignment(-overlap)
        order = np.empty(n, dtype=int)
        order[rows] = cols
        for b in range(n):
            row = np.sort(overlap[b])[::-1]
            if n > 1 and row[0] - row[1] < AMBIGUITY_MARGIN:
                ambiguous.append((k, b))
        out[k] = values[k][order]
        prev_vec = vectors[k][:, order]
    return SweepTraces(currents, out, H.reference_ghz, tuple(ambiguous))
