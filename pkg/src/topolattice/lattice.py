"""Dimerized (SSH) resonator chains with alternating on-site loss.

Frequencies are handled in MHz relative to the bare resonance ``omega0``.
The GHz carrier is kept on the side (``Hamiltonian.reference_ghz``) so
that MHz-scale couplings are never added to a ~5000 MHz diagonal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

JSON_KEYS = (
    "n_cells",
    "omega0_ghz",
    "gamma_a_mhz",
    "gamma_b_mhz",
    "v_mhz",
    "w_mhz",
    "hopping_imag_mhz",
)


@dataclass(frozen=True)
class LatticeSpec:
    """Parameters of a 2N-site chain.

    Odd sites (1, 3, ...) carry loss ``gamma_a``, even sites ``gamma_b``.
    ``v`` couples sites (2j-1, 2j), ``w`` couples (2j, 2j+1).  All rates are
    in MHz (already divided by 2 pi), ``omega0`` is in GHz.
    """

    n_cells: int
    omega0: float
    gamma_a: float
    gamma_b: float
    v: float
    w: float
    hopping_imag: float = 0.0

    def __post_init__(self):
        if isinstance(self.n_cells, bool) or int(self.n_cells) != self.n_cells:
            raise ValueError(f"n_cells must be an integer, got {self.n_cells!r}")
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        for name in ("gamma_a", "gamma_b", "v", "w"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not np.isfinite(self.omega0) or not np.isfinite(self.hopping_imag):
            raise ValueError("omega0 and hopping_imag must be finite")

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells

    @property
    def delta_gamma(self) -> float:
        return self.gamma_b - self.gamma_a

    @property
    def gamma_mean(self) -> float:
        return 0.5 * (self.gamma_a + self.gamma_b)

    @property
    def is_hermitian(self) -> bool:
        """True when the chain is Hermitian up to a uniform loss offset."""
        return self.gamma_a == self.gamma_b and self.hopping_imag == 0

    @property
    def intracell(self) -> complex:
        return complex(self.v, -self.hopping_imag)

    @property
    def intercell(self) -> complex:
        return complex(self.w, -self.hopping_imag)

    def with_contrast(self, delta_gamma: float) -> "LatticeSpec":
        """Same chain with loss contrast ``delta_gamma`` at fixed mean loss.

        If the contrast would push ``gamma_a`` below zero the mean loss is
        raised just enough to keep ``gamma_a = 0``; that is a uniform loss
        shift and moves every eigenvalue by the same imaginary constant.
        """
        if delta_gamma < 0:
            raise ValueError("delta_gamma must be >= 0")
        mean = max(self.gamma_mean, 0.5 * delta_gamma)
        return replace(self, gamma_a=mean - 0.5 * delta_gamma, gamma_b=mean + 0.5 * delta_gamma)

    def to_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "omega0_ghz": self.omega0,
            "gamma_a_mhz": self.gamma_a,
            "gamma_b_mhz": self.gamma_b,
            "v_mhz": self.v,
            "w_mhz": self.w,
            "hopping_imag_mhz": self.hopping_imag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec":
        unknown = set(data) - set(JSON_KEYS)
        if unknown:
            raise ValueError(f"unknown lattice keys: {sorted(unknown)}")
        missing = set(JSON_KEYS[:-1]) - set(data)
        if missing:
            raise ValueError(f"missing lattice keys: {sorted(missing)}")
        return cls(
            n_cells=data["n_cells"],
            omega0=float(data["omega0_ghz"]),
            gamma_a=float(data["gamma_a_mhz"]),
            gamma_b=float(data["gamma_b_mhz"]),
            v=float(data["v_mhz"]),
            w=float(data["w_mhz"]),
            hopping_imag=float(data.get("hopping_imag_mhz", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.from_dict(json.loads(text))


# Parameter sets quoted for the two fabricated chains (six unit cells each).
HERMITIAN_CHAIN = LatticeSpec(n_cells=6, omega0=5.62, gamma_a=24.42, gamma_b=24.42, v=216.5, w=341.0)
NON_HERMITIAN_CHAIN = LatticeSpec(n_cells=6, omega0=5.48, gamma_a=36.0, gamma_b=73.0, v=208.5, w=335.5)


@dataclass(frozen=True)
class Hamiltonian:
    """A complex matrix in MHz, offset from ``reference_ghz``."""

    matrix: np.ndarray
    reference_ghz: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def absolute_mhz(self) -> np.ndarray:
        return self.matrix + 1000.0 * self.reference_ghz * np.eye(self.dim)


def build_chain_hamiltonian(spec: LatticeSpec) -> Hamiltonian:
    """Real-space chain matrix, site s stored at row s-1."""
    n = spec.n_sites
    losses = np.where(np.arange(n) % 2 == 0, spec.gamma_a, spec.gamma_b)
    h = np.diag(-1j * losses).astype(complex)
    bonds = np.where(np.arange(n - 1) % 2 == 0, spec.intracell, spec.intercell)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = bonds
    h[idx + 1, idx] = bonds
    return Hamiltonian(h, spec.omega0)


def off_diagonal(spec: LatticeSpec, k):
    """h(k) = v + w exp(-ik), with the complex hopping correction included."""
    return spec.intracell + spec.intercell * np.exp(-1j * np.asarray(k))


def bloch_hamiltonian(spec: LatticeSpec, k: float) -> Hamiltonian:
    # Lower-left entry is h(-k): Fourier transform of the symmetric real-space
    # hoppings. Equals conj(h(k)) whenever hopping_imag == 0.
    h = np.array(
        [
            [-1j * spec.gamma_a, off_diagonal(spec, k)],
            [off_diagonal(spec, -k), -1j * spec.gamma_b],
        ],
        dtype=complex,
    )
    return Hamiltonian(h, spec.omega0)


def bulk_bands(spec: LatticeSpec, k):
    """Analytic Bloch eigenvalues (MHz offsets from omega0), lower sign first.

    Works elementwise on array ``k``.  Uses the principal square root, so
    when |h(k)| < delta_gamma/2 the pair shares its real part and splits in
    loss.
    """
    k = np.asarray(k, dtype=float)
    root = np.sqrt(off_diagonal(spec, k) * off_diagonal(spec, -k) - (0.5 * spec.delta_gamma) ** 2 + 0j)
    centre = -1j * spec.gamma_mean
    return centre - root, centre + root
