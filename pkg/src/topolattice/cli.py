"""``topolattice`` command line: run, validate and print preset experiments."""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, ExperimentConfig, load_preset, parse_config
from .export import csv_text, write_text
from .fitting import branches_from_map, fit_level_repulsion, initial_guess
from .magnon import effective_coupling
from .scattering import absorptivity, s_matrix, transmission_map
from .spectral import chain_spectrum, normalized_eigenvalues
from .topology import (
    OutOfDomainError,
    ep_reports_csv,
    ep_scan,
    threshold_vs_length,
    winding_generalized,
    winding_hermitian,
)


class Artifacts:
    """Ordered artifact writer that can undo itself on failure."""

    def __init__(self, out_dir: Path, prefix: str):
        self.out_dir = out_dir
        self.prefix = prefix
        self.written: list = []
        self.summaries: list = []

    def write(self, name: str, text: str, rows: int, summary: str = "") -> Path:
        path = self.out_dir / f"{self.prefix}_{name}"
        path.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(path)
        write_text(path, text)
        self.summaries.append(f"{path}  rows={rows}" + (f"  {summary}" if summary else ""))
        return path

    def rollback(self):
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()


def _task_spectrum(cfg: ExperimentConfig, art: Artifacts, threads: int):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spectrum = chain_spectrum(cfg.lattice)
    n_edge = len(spectrum.edge_modes())
    losses = ", ".join(f"{m.loss_mhz:.2f}" for m in spectrum.edge_modes())
    summary = f"edge_modes={n_edge}" + (f"  edge_loss_mhz=[{losses}]" if n_edge else "")
    art.write("spectrum.json", spectrum.to_json(), len(spectrum), summary)
    art.write("spectrum.csv", spectrum.to_csv(), len(spectrum), summary)


def _task_winding(cfg: ExperimentConfig, art: Artifacts, threads: int):
    n_k = cfg.grids.n_k
    w_h = winding_hermitian(cfg.lattice, n_k)
    try:
        w_nh, note = winding_generalized(cfg.lattice, n_k), None
    except OutOfDomainError as err:
        w_nh, note = None, str(err)
    doc = {"n_k": n_k, "w_hermitian": w_h, "w_generalized": w_nh}
    if note:
        doc["w_generalized_note"] = note
    art.write("winding.json", json.dumps(doc, indent=1), 1, f"W={w_h}  W_nh={w_nh}")


def _task_ep_scan(cfg: ExperimentConfig, art: Artifacts, threads: int):
    spec = cfg.lattice
    grid = cfg.grids.delta_gammas_mhz.values()
    reports = ep_scan(spec, grid, threads=threads)
    first = f"first_ep_normalized={reports[0].normalized:.4f}  kind={reports[0].kind}" if reports else "no_ep_in_grid"
    art.write("ep_scan.csv", ep_reports_csv(reports), len(reports), first)

    rows = []
    for dg in grid:
        s = spec.with_contrast(float(dg))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sp = chain_spectrum(s)
        for mode, (br, bi) in zip(sp.modes, normalized_eigenvalues(sp)):
            rows.append((float(dg), float(dg) / (2 * (spec.v + spec.w)), mode.index, br, bi))
    art.write(
        "beta.csv",
        csv_text(["delta_gamma_mhz", "normalized", "m", "beta_real", "beta_imag"], rows),
        len(rows),
    )


def _task_threshold(cfg: ExperimentConfig, art: Artifacts, threads: int):
    table = threshold_vs_length(cfg.lattice, cfg.grids.n_values)
    summary = f"slope={table.slope:.4f}  r_squared={table.r_squared:.5f}" if table.r_squared is not None else ""
    art.write("threshold_scaling.csv", table.to_csv(), len(table.n_cells), summary)


def _make_map(cfg: ExperimentConfig, threads: int):
    return transmission_map(
        cfg.lattice, cfg.magnon, cfg.ports, cfg.grids.currents_a.values(), cfg.grids.omegas_ghz.values(), threads
    )


def _task_map(cfg: ExperimentConfig, art: Artifacts, threads: int):
    tmap = _make_map(cfg, threads)
    rows = tmap.s21_sq.size
    art.write("map.json", tmap.header_json(), 1)
    art.write("map.csv", tmap.to_csv(), rows, f"max_s21_sq={tmap.s21_sq.max():.4g}")


def _task_absorptivity(cfg: ExperimentConfig, art: Artifacts, threads: int):
    omegas = cfg.grids.omegas_ghz.values()
    a1 = absorptivity(cfg.lattice, cfg.ports, omegas, 1)
    a2 = absorptivity(cfg.lattice, cfg.ports, omegas, 2)
    s21 = np.abs(s_matrix(cfg.lattice, cfg.ports, omegas)[:, 1, 0]) ** 2
    rows = [(float(w), float(x), float(y), float(t)) for w, x, y, t in zip(omegas, a1, a2, s21)]
    art.write(
        "absorptivity.csv",
        csv_text(["omega_ghz", "a1", "a2", "s21_sq"], rows),
        len(rows),
        f"max_abs_a1_minus_a2={np.max(np.abs(a1 - a2)):.3g}",
    )


def _task_fit(cfg: ExperimentConfig, art: Artifacts, threads: int):
    tmap = _make_map(cfg, threads)
    upper, lower = branches_from_map(tmap, cfg.fit.window_ghz)
    init = initial_guess((upper, lower), cfg.magnon, cfg.fit.loss_m_mhz, cfg.fit.gamma_n_mhz)
    result = fit_level_repulsion((upper, lower), cfg.magnon, init, free_gamma_n=cfg.fit.free_gamma_n)
    doc = result.to_dict()
    doc["flags"] = list(result.flags)
    # forward-model reference: g0 |phi_{m,s}| of the chain mode closest to the fitted frequency
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sp = chain_spectrum(cfg.lattice)
    mode = min(sp.modes, key=lambda m: abs(m.re_ghz - result.omega_m))
    doc["model_mode"] = mode.index
    doc["model_g_mhz"] = effective_coupling(sp, mode.index, cfg.magnon.site, cfg.magnon.g0)
    art.write("fit.json", json.dumps(doc, indent=1), 1, f"g_mhz={result.g:.3f}  converged={result.converged}")


TASK_RUNNERS = {
    "spectrum": _task_spectrum,
    "winding": _task_winding,
    "ep-scan": _task_ep_scan,
    "threshold-scaling": _task_threshold,
    "map": _task_map,
    "absorptivity": _task_absorptivity,
    "fit": _task_fit,
}


def run(cfg: ExperimentConfig, out_dir=".", threads: int = 1, stream=None) -> int:
    """Execute one experiment; returns the process exit status."""
    stream = sys.stdout if stream is None else stream
    art = Artifacts(Path(out_dir), cfg.output)
    try:
        TASK_RUNNERS[cfg.task](cfg, art, threads)
    except Exception as err:  # surfaced as a machine-readable report
        art.rollback()
        report = {"status": "error", "task": cfg.task, "error": type(err).__name__, "message": str(err)}
        print(json.dumps(report), file=sys.stderr)
        return 1
    for line in art.summaries:
        print(line, file=stream)
    return 0


def _threads(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("TOPOLATTICE_THREADS")
    return int(env) if env else 1


def _read_config(path: str) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="topolattice", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=".", help="artifact directory")
    p_run.add_argument("--threads", type=int, default=None)
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    p_pre = sub.add_parser("preset", help="print a shipped config")
    p_pre.add_argument("name", choices=PRESETS)
    args = parser.parse_args(argv)

    if args.command == "preset":
        sys.stdout.write(load_preset(args.name))
        return 0
    try:
        cfg = _read_config(args.config)
    except ConfigError as err:
        print(json.dumps({"status": "invalid", "errors": err.errors}), file=sys.stderr)
        return 2
    except OSError as err:
        print(json.dumps({"status": "error", "error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"ok: task={cfg.task}")
        return 0
    return run(cfg, args.out, _threads(args.threads))


if __name__ == "__main__":
    sys.exit(main())
