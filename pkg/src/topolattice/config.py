"""Experiment configuration documents.

A config is one JSON object::

    {"task": "map", "output": "fig2",
     "lattice": {...}, "magnon": {...}, "ports": {...},
     "grids": {"currents_a": {"start": 0, "stop": 8, "num": 161}, ...},
     "fit": {"window_ghz": [5.4, 5.85]}}

Parsing collects every problem before failing.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .lattice import JSON_KEYS as LATTICE_KEYS
from .lattice import LatticeSpec
from .magnon import MAGNON_KEYS, MagnonSpec
from .scattering import PORT_KEYS, PortConfig

TASKS = ("spectrum", "winding", "ep-scan", "threshold-scaling", "map", "absorptivity", "fit")
TOP_KEYS = ("task", "output", "lattice", "magnon", "ports", "grids", "fit")
RANGE_GRIDS = ("currents_a", "omegas_ghz", "delta_gammas_mhz")
GRID_KEYS = RANGE_GRIDS + ("n_values", "n_k")
FIT_KEYS = ("window_ghz", "loss_m_mhz", "gamma_n_mhz", "free_gamma_n")
PRESETS = ("fig1c", "fig1e", "fig2", "fig3", "fig4a", "fig4b", "fig4cd")

REQUIRED = {
    "spectrum": (),
    "winding": (),
    "ep-scan": ("grids.delta_gammas_mhz",),
    "threshold-scaling": ("grids.n_values",),
    "map": ("magnon", "ports", "grids.currents_a", "grids.omegas_ghz"),
    "absorptivity": ("ports", "grids.omegas_ghz"),
    "fit": ("magnon", "ports", "grids.currents_a", "grids.omegas_ghz", "fit"),
}

_UNIT = re.compile(r"_(ghz_per_a|ghz|mhz|a)$")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Range:
    start: float
    stop: float
    num: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "num": self.num}


@dataclass(frozen=True)
class Grids:
    currents_a: Optional[Range] = None
    omegas_ghz: Optional[Range] = None
    delta_gammas_mhz: Optional[Range] = None
    n_values: Optional[tuple] = None
    n_k: int = 256

    def to_dict(self) -> dict:
        out = {k: getattr(self, k).to_dict() for k in RANGE_GRIDS if getattr(self, k) is not None}
        if self.n_values is not None:
            out["n_values"] = list(self.n_values)
        out["n_k"] = self.n_k
        return out


@dataclass(frozen=True)
class FitOptions:
    window_ghz: tuple
    loss_m_mhz: float = 0.0
    gamma_n_mhz: float = 0.0
    free_gamma_n: bool = False

    def to_dict(self) -> dict:
        return {
            "window_ghz": list(self.window_ghz),
            "loss_m_mhz": self.loss_m_mhz,
            "gamma_n_mhz": self.gamma_n_mhz,
            "free_gamma_n": self.free_gamma_n,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    lattice: LatticeSpec
    output: str = "out"
    magnon: Optional[MagnonSpec] = None
    ports: Optional[PortConfig] = None
    grids: Grids = field(default_factory=Grids)
    fit: Optional[FitOptions] = None

    def to_dict(self) -> dict:
        out = {"task": self.task, "output": self.output, "lattice": self.lattice.to_dict()}
        if self.magnon is not None:
            out["magnon"] = self.magnon.to_dict()
        if self.ports is not None:
            out["ports"] = self.ports.to_dict()
        out["grids"] = self.grids.to_dict()
        if self.fit is not None:
            out["fit"] = self.fit.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_keys(section: str, data, allowed, errors) -> bool:
    if not isinstance(data, dict):
        errors.append(f"{section}: expected an object")
        return False
    stems = {_UNIT.sub("", k): k for k in allowed}
    for key in data:
        if key in allowed:
            continue
        stem = _UNIT.sub("", key)
        if stem != key and stem in stems:
            errors.append(f"{section}.{key}: unit suffix mismatch, expected '{stems[stem]}'")
        else:
            errors.append(f"{section}.{key}: unknown key")
    return True


def _number(section, data, key, errors, required=True, integer=False):
    if key not in data:
        if required:
            errors.append(f"{section}.{key}: missing")
        return None
    value = data[key]
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        errors.append(f"{section}.{key}: expected {'an integer' if integer else 'a number'}, got {value!r}")
        return None
    return value


def _build(section, factory, data, errors):
    try:
        return factory(data)
    except (ValueError, TypeError) as err:
        errors.append(f"{section}: {err}")
        return None


def _parse_range(name, data, errors) -> Optional[Range]:
    section = f"grids.{name}"
    if not _check_keys(section, data, ("start", "stop", "num"), errors):
        return None
    n0 = len(errors)
    start = _number(section, data, "start", errors)
    stop = _number(section, data, "stop", errors)
    num = _number(section, data, "num", errors, integer=True)
    if len(errors) > n0:
        return None
    if num < 1:
        errors.append(f"{section}.num: must be >= 1")
        return None
    if num > 1 and not start < stop:
        errors.append(f"{section}: start must be < stop")
        return None
    return Range(start, stop, num)


def parse_config(document: str) -> ExperimentConfig:
    """Validate a JSON config; raises ConfigError listing every problem."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as err:
        raise ConfigError([f"malformed JSON: {err}"]) from err
    errors: list = []
    if not _check_keys("config", data, TOP_KEYS, errors):
        raise ConfigError(errors)

    task = data.get("task")
    if task not in TASKS:
        errors.append(f"config.task: expected one of {list(TASKS)}, got {task!r}")
    output = data.get("output", "out")
    if not isinstance(output, str) or not output:
        errors.append("config.output: expected a nonempty string")

    lattice = None
    if "lattice" not in data:
        errors.append("lattice: missing section")
    elif _check_keys("lattice", data["lattice"], LATTICE_KEYS, errors):
        n0 = len(errors)
        for key in LATTICE_KEYS:
            _number("lattice", data["lattice"], key, errors, required=key != "hopping_imag_mhz", integer=key == "n_cells")
        if len(errors) == n0:
            lattice = _build("lattice", LatticeSpec.from_dict, data["lattice"], errors)

    magnon = None
    if "magnon" in data and _check_keys("magnon", data["magnon"], MAGNON_KEYS, errors):
        n0 = len(errors)
        for key in MAGNON_KEYS:
            _number("magnon", data["magnon"], key, errors, required=key != "c1_ghz_per_a", integer=key == "site")
        if len(errors) == n0:
            magnon = _build("magnon", MagnonSpec.from_dict, data["magnon"], errors)
            if magnon is not None and lattice is not None and magnon.site > lattice.n_sites:
                errors.append(f"magnon.site: {magnon.site} outside 1..{lattice.n_sites}")

    ports = None
    if "ports" in data and _check_keys("ports", data["ports"], PORT_KEYS, errors):
        n0 = len(errors)
        _number("ports", data["ports"], "kappa1_mhz", errors)
        _number("ports", data["ports"], "kappa2_mhz", errors)
        _number("ports", data["ports"], "port1_site", errors, required=False, integer=True)
        if data["ports"].get("port2_site") is not None:
            _number("ports", data["ports"], "port2_site", errors, integer=True)
        if len(errors) == n0:
            ports = _build("ports", PortConfig.from_dict, data["ports"], errors)
            if ports is not None and lattice is not None:
                _build("ports", lambda _: ports.sites(lattice.n_sites), None, errors)

    grids = Grids()
    raw_grids = data.get("grids", {})
    if _check_keys("grids", raw_grids, GRID_KEYS, errors):
        ranges = {name: _parse_range(name, raw_grids[name], errors) for name in RANGE_GRIDS if name in raw_grids}
        n_values = None
        if "n_values" in raw_grids:
            nv = raw_grids["n_values"]
            if not isinstance(nv, list) or not nv or not all(isinstance(n, int) and not isinstance(n, bool) for n in nv):
                errors.append("grids.n_values: expected a nonempty list of integers")
            elif any(b <= a for a, b in zip(nv, nv[1:])):
                errors.append("grids.n_values: must be strictly ascending")
            else:
                n_values = tuple(nv)
        n_k = _number("grids", raw_grids, "n_k", errors, required=False, integer=True)
        if n_k is not None and n_k < 64:
            errors.append("grids.n_k: must be >= 64")
        grids = Grids(**ranges, n_values=n_values, n_k=256 if n_k is None else n_k)

    fit = None
    if "fit" in data and _check_keys("fit", data["fit"], FIT_KEYS, errors):
        raw = data["fit"]
        window = raw.get("window_ghz")
        if not (isinstance(window, list) and len(window) == 2 and all(isinstance(x, (int, float)) for x in window)
                and window[0] < window[1]):
            errors.append("fit.window_ghz: expected [low, high] with low < high")
        else:
            loss = _number("fit", raw, "loss_m_mhz", errors, required=False)
            gamma_n = _number("fit", raw, "gamma_n_mhz", errors, required=False)
            free = raw.get("free_gamma_n", False)
            if not isinstance(free, bool):
                errors.append("fit.free_gamma_n: expected true/false")
            fit = FitOptions(tuple(window), loss or 0.0, gamma_n or 0.0, bool(free))

    if task in REQUIRED:
        present = {
            "magnon": "magnon" in data,
            "ports": "ports" in data,
            "fit": "fit" in data,
            **{f"grids.{k}": isinstance(raw_grids, dict) and k in raw_grids for k in GRID_KEYS},
        }
        for need in REQUIRED[task]:
            if not present[need]:
                errors.append(f"task '{task}' requires section '{need}'")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(task, lattice, output, magnon, ports, grids, fit)


def load_preset(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return resources.files("topolattice").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
