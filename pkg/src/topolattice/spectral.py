"""Dense eigendecomposition of chain matrices and per-mode diagnostics."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .export import csv_text
from .lattice import Hamiltonian, LatticeSpec

RESIDUAL_TOL = 1e-8
DEGENERACY_TOL = 1e-6
PT_TOL_MHZ = 0.5


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenMode:
    """One right eigenvector of a chain matrix.

    ``value`` is the complex eigenfrequency in MHz relative to
    ``reference_ghz``; its imaginary part is minus the loss rate.
    ``amplitudes[s-1]`` is the amplitude on site s, unit Euclidean norm.
    """

    index: int
    value: complex
    amplitudes: np.ndarray
    reference_ghz: float = 0.0
    kind: Optional[str] = None  # "edge" | "bulk"
    pt_tag: Optional[str] = None  # "unbroken" | "broken-low-loss" | "broken-high-loss"
    degenerate: bool = False

    @property
    def re_ghz(self) -> float:
        return self.reference_ghz + self.value.real / 1000.0

    @property
    def loss_mhz(self) -> float:
        return -self.value.imag


@dataclass(frozen=True)
class Spectrum:
    modes: tuple
    spec: Optional[LatticeSpec] = None
    reference_ghz: float = 0.0

    def __len__(self):
        return len(self.modes)

    def __getitem__(self, m: int) -> EigenMode:
        """Mode by its 1-based index m."""
        return self.modes[m - 1]

    @property
    def values(self) -> np.ndarray:
        return np.array([mode.value for mode in self.modes])

    @property
    def vectors(self) -> np.ndarray:
        """Columns are the mode amplitudes."""
        return np.column_stack([mode.amplitudes for mode in self.modes])

    def edge_modes(self) -> list:
        return [mode for mode in self.modes if mode.kind == "edge"]

    def to_records(self) -> list:
        return [
            {
                "m": mode.index,
                "re_ghz": mode.re_ghz,
                "loss_mhz": mode.loss_mhz,
                "class": mode.kind,
                "pt_tag": mode.pt_tag,
                "pdos": pdos(mode).tolist(),
            }
            for mode in self.modes
        ]

    def to_json(self) -> str:
        return json.dumps({"modes": self.to_records()}, indent=1)

    def to_csv(self) -> str:
        n = len(self.modes[0].amplitudes) if self.modes else 0
        header = ["m", "re_ghz", "loss_mhz", "class", "pt_tag"] + [f"s{s}" for s in range(1, n + 1)]
        rows = [
            [mode.index, mode.re_ghz, mode.loss_mhz, mode.kind or "", mode.pt_tag or ""]
            + [float(x) for x in pdos(mode)]
            for mode in self.modes
        ]
        return csv_text(header, rows)


def _sort_order(values: np.ndarray, tol: float) -> np.ndarray:
    """Ascending real part; real parts equal within ``tol`` ordered by loss."""
    order = list(np.argsort(values.real, kind="stable"))
    out, group = [], [order[0]]
    for i in order[1:]:
        if values[i].real - values[group[0]].real <= tol:
            group.append(i)
        else:
            out.extend(sorted(group, key=lambda j: -values[j].imag))
            group = [i]
    out.extend(sorted(group, key=lambda j: -values[j].imag))
    return np.array(out)


def eigendecompose(H, spec: Optional[LatticeSpec] = None) -> Spectrum:
    """All eigenpairs of a dense complex matrix.

    ``H`` is a :class:`Hamiltonian` or a bare square array (reference 0).
    Raises :class:`EigenSolverError` if LAPACK fails to converge or any
    eigenpair misses the residual bound.
    """
    if isinstance(H, Hamiltonian):
        matrix, reference = H.matrix, H.reference_ghz
    else:
        matrix, reference = np.asarray(H, dtype=complex), 0.0
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    n = matrix.shape[0]
    try:
        values, vectors = np.linalg.eig(matrix)
    except np.linalg.LinAlgError as err:
        raise EigenSolverError(f"eigensolver failed on {n}x{n} matrix: {err}") from err

    scale = max(np.linalg.norm(matrix, 2), 1e-300)
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    residuals = np.linalg.norm(matrix @ vectors - vectors * values, axis=0)
    worst = residuals.max(initial=0.0)
    if worst > RESIDUAL_TOL * scale:
        raise EigenSolverError(
            f"{n}x{n} eigensolve: residual {worst:.3e} exceeds {RESIDUAL_TOL:g}*||H|| = {RESIDUAL_TOL * scale:.3e}"
        )

    order = _sort_order(values, 1e-9 * scale)
    values, vectors = values[order], vectors[:, order]
    if spec is not None:
        deg_tol = DEGENERACY_TOL * (spec.v + spec.w)
    else:
        deg_tol = DEGENERACY_TOL * scale
    gaps = np.abs(values[:, None] - values[None, :]) + np.diag(np.full(n, np.inf))
    degenerate = gaps.min(axis=1) < deg_tol if n > 1 else np.zeros(1, bool)
    modes = tuple(
        EigenMode(m + 1, complex(values[m]), vectors[:, m].copy(), reference, degenerate=bool(degenerate[m]))
        for m in range(n)
    )
    return Spectrum(modes, spec, reference)


def chain_spectrum(spec: LatticeSpec) -> Spectrum:
    """Diagonalize and classify the chain described by ``spec``."""
    from .lattice import build_chain_hamiltonian

    return classify_modes(eigendecompose(build_chain_hamiltonian(spec), spec))


def pdos(mode: EigenMode) -> np.ndarray:
    return np.abs(mode.amplitudes) ** 2


def classify_modes(spectrum: Spectrum) -> Spectrum:
    """Tag modes as edge/bulk (mid-gap test) and by PT phase (loss vs mean loss)."""
    spec = spectrum.spec
    if spec is None:
        raise ValueError("classification needs the originating LatticeSpec")
    half_gap = 0.5 * abs(spec.w - spec.v)
    offset = 1000.0 * (spectrum.reference_ghz - spec.omega0)
    modes = []
    for mode in spectrum.modes:
        kind = "edge" if abs(mode.value.real + offset) < half_gap else "bulk"
        diff = mode.loss_mhz - spec.gamma_mean
        if abs(diff) <= PT_TOL_MHZ:
            tag = "unbroken"
        elif diff < 0:
            tag = "broken-low-loss"
        else:
            tag = "broken-high-loss"
        modes.append(replace(mode, kind=kind, pt_tag=tag))
    n_edge = sum(m.kind == "edge" for m in modes)
    if spec.v < spec.w and n_edge != 2:
        warnings.warn(f"expected 2 edge modes for v < w, found {n_edge}", RuntimeWarning, stacklevel=2)
    return replace(spectrum, modes=tuple(modes))


def normalized_eigenvalues(spectrum: Spectrum) -> list:
    """(beta_real, beta_imag) per mode, in units of v + w."""
    spec = spectrum.spec
    scale = spec.v + spec.w
    offset = 1000.0 * (spectrum.reference_ghz - spec.omega0)
    return [
        ((mode.value.real + offset) / scale, (abs(mode.value.imag) - spec.gamma_mean) / scale)
        for mode in spectrum.modes
    ]


def particle_hole_residual(spectrum: Spectrum) -> float:
    """Hausdorff distance between {eps} and {-conj(eps)}, eps = value + i*mean loss."""
    spec = spectrum.spec
    offset = 1000.0 * (spectrum.reference_ghz - spec.omega0)
    eps = spectrum.values + offset + 1j * spec.gamma_mean
    mirrored = -np.conj(eps)
    d = np.abs(eps[:, None] - mirrored[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
