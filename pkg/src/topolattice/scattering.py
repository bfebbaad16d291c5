"""Two-port response of a chain in temporal coupled-mode form.

S_ab(omega) = delta_ab - 2i sqrt(k_a k_b) G_{p_a p_b}(omega),
G = (omega - H_eff)^-1,  H_eff = H - i k1 |p1><p1| - i k2 |p2><p2|.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .export import csv_text
from .lattice import Hamiltonian, LatticeSpec, build_chain_hamiltonian
from .magnon import MagnonSpec, build_coupled_hamiltonian

PORT_KEYS = ("port1_site", "port2_site", "kappa1_mhz", "kappa2_mhz")


class ScatteringError(RuntimeError):
    pass


@dataclass(frozen=True)
class PortConfig:
    """Input/output ports; ``port2_site=None`` means the last chain site."""

    kappa1: float
    kappa2: float
    port1_site: int = 1
    port2_site: Optional[int] = None

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("kappa must be >= 0")
        if self.port1_site < 1 or (self.port2_site is not None and self.port2_site < 1):
            raise ValueError("port sites are 1-based")

    def sites(self, n_sites: int) -> tuple:
        p1 = self.port1_site
        p2 = n_sites if self.port2_site is None else self.port2_site
        for p in (p1, p2):
            if p > n_sites:
                raise ValueError(f"port site {p} outside 1..{n_sites}")
        return p1, p2

    def to_dict(self) -> dict:
        return {
            "port1_site": self.port1_site,
            "port2_site": self.port2_site,
            "kappa1_mhz": self.kappa1,
            "kappa2_mhz": self.kappa2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PortConfig":
        unknown = set(data) - set(PORT_KEYS)
        if unknown:
            raise ValueError(f"unknown port keys: {sorted(unknown)}")
        missing = {"kappa1_mhz", "kappa2_mhz"} - set(data)
        if missing:
            raise ValueError(f"missing port keys: {sorted(missing)}")
        return cls(
            kappa1=float(data["kappa1_mhz"]),
            kappa2=float(data["kappa2_mhz"]),
            port1_site=int(data.get("port1_site", 1)),
            port2_site=None if data.get("port2_site") is None else int(data["port2_site"]),
        )


def _as_hamiltonian(system: Union[LatticeSpec, Hamiltonian]) -> Hamiltonian:
    if isinstance(system, LatticeSpec):
        return build_chain_hamiltonian(system)
    return system


def _chain_sites(H: Hamiltonian, system, n_sites: Optional[int]) -> int:
    # ports index chain sites; pass n_sites when a magnon row is appended
    if n_sites is not None:
        return n_sites
    if isinstance(system, LatticeSpec):
        return system.n_sites
    return H.dim


def effective_hamiltonian(H: Hamiltonian, ports: PortConfig, n_sites: Optional[int] = None) -> Hamiltonian:
    p1, p2 = ports.sites(H.dim if n_sites is None else n_sites)
    m = H.matrix.copy()
    m[p1 - 1, p1 - 1] -= 1j * ports.kappa1
    m[p2 - 1, p2 - 1] -= 1j * ports.kappa2
    return Hamiltonian(m, H.reference_ghz)


def _s_batch(H: Hamiltonian, ports: PortConfig, omegas_ghz, n_sites: int) -> np.ndarray:
    """S matrices, shape (len(omegas), 2, 2)."""
    p1, p2 = ports.sites(n_sites)
    heff = effective_hamiltonian(H, ports, n_sites).matrix
    n = heff.shape[0]
    w = 1000.0 * (np.atleast_1d(np.asarray(omegas_ghz, dtype=float)) - H.reference_ghz)
    lhs = w[:, None, None] * np.eye(n) - heff
    rhs = np.zeros((n, 2), dtype=complex)
    rhs[p1 - 1, 0] = 1.0
    rhs[p2 - 1, 1] = 1.0
    try:
        cols = np.linalg.solve(lhs, np.broadcast_to(rhs, (len(w), n, 2)))
    except np.linalg.LinAlgError as err:
        raise ScatteringError(f"singular resolvent in {len(w)}-point frequency batch: {err}") from err
    G = cols[:, [p1 - 1, p2 - 1], :]  # G[:, a, b] = G_{p_a p_b}
    if not np.all(np.isfinite(G)):
        bad = np.where(~np.isfinite(G).all(axis=(1, 2)))[0][0]
        raise ScatteringError(f"resolvent not finite at omega = {omegas_ghz[bad]!r} GHz")
    k = np.sqrt([ports.kappa1, ports.kappa2])
    return np.eye(2) - 2j * np.outer(k, k) * G


def s_matrix(
    system: Union[LatticeSpec, Hamiltonian], ports: PortConfig, omega, n_sites: Optional[int] = None
) -> np.ndarray:
    """2x2 S at probe frequency ``omega`` (GHz); an array of omegas gives (n, 2, 2).

    ``n_sites`` sets the chain length that ``port2_site=None`` refers to.
    """
    H = _as_hamiltonian(system)
    S = _s_batch(H, ports, omega, _chain_sites(H, system, n_sites))
    return S[0] if np.ndim(omega) == 0 else S


def absorptivity(system, ports: PortConfig, omega, input_port: int = 1, n_sites: Optional[int] = None):
    """Fraction of power fed at ``input_port`` (1 or 2) that is dissipated."""
    if input_port not in (1, 2):
        raise ValueError("input_port must be 1 or 2")
    S = s_matrix(system, ports, np.atleast_1d(omega), n_sites)
    p = input_port - 1
    a = 1.0 - np.abs(S[:, p, p]) ** 2 - np.abs(S[:, 1 - p, p]) ** 2
    return float(a[0]) if np.ndim(omega) == 0 else a


@dataclass
class TransmissionMap:
    currents: np.ndarray
    omegas: np.ndarray  # GHz
    s21_sq: np.ndarray  # [current, omega]
    a1: np.ndarray
    a2: np.ndarray
    metadata: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {
            "currents_a": [float(x) for x in self.currents],
            "omegas_ghz": [float(x) for x in self.omegas],
            **self.metadata,
        }

    def header_json(self) -> str:
        return json.dumps(self.header(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        rows = (
            (float(i), float(w), float(self.s21_sq[k, j]), float(self.a1[k, j]), float(self.a2[k, j]))
            for k, i in enumerate(self.currents)
            for j, w in enumerate(self.omegas)
        )
        return csv_text(["current_a", "omega_ghz", "s21_sq", "a1", "a2"], rows)

    @classmethod
    def from_files(cls, header_text: str, csv_body: str) -> "TransmissionMap":
        header = json.loads(header_text)
        currents = np.array(header.pop("currents_a"))
        omegas = np.array(header.pop("omegas_ghz"))
        data = np.loadtxt(csv_body.splitlines()[1:], delimiter=",", ndmin=2)
        shape = (len(currents), len(omegas))
        return cls(
            currents, omegas, data[:, 2].reshape(shape), data[:, 3].reshape(shape), data[:, 4].reshape(shape), header
        )


def transmission_map(
    spec: LatticeSpec,
    magnon: MagnonSpec,
    ports: PortConfig,
    currents: Sequence[float],
    omegas: Sequence[float],
    threads: int = 1,
) -> TransmissionMap:
    """|S21|^2 and both absorptivities over (current x probe frequency)."""
    currents = np.asarray(currents, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    if currents.size == 0 or omegas.size == 0:
        raise ValueError("current and frequency grids must be nonempty")
    H = build_chain_hamiltonian(spec)
    ports.sites(spec.n_sites)

    def row(i):
        Hc = build_coupled_hamiltonian(H, magnon, float(magnon.frequency(i)))
        try:
            S = _s_batch(Hc, ports, omegas, spec.n_sites)
        except ScatteringError as err:
            raise ScatteringError(f"current {i!r} A: {err}") from err
        s21 = np.abs(S[:, 1, 0]) ** 2
        a1 = 1 - np.abs(S[:, 0, 0]) ** 2 - s21
        a2 = 1 - np.abs(S[:, 1, 1]) ** 2 - np.abs(S[:, 0, 1]) ** 2
        return s21, a1, a2

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, currents))
    else:
        rows = [row(i) for i in currents]
    s21, a1, a2 = (np.array(x) for x in zip(*rows))
    meta = {"lattice": spec.to_dict(), "magnon": magnon.to_dict(), "ports": ports.to_dict()}
    return TransmissionMap(currents, omegas, s21, a1, a2, meta)
