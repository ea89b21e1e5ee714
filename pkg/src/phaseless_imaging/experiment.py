"""Sweep driver: config -> simulated data -> recovery -> MUSIC -> files on disk."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig
from .errors import ConfigError
from .forward import assemble_response_born, assemble_response_paraxial
from .geometry import (
    ArrayGeometry,
    ImagingGrid,
    Scene,
    linear_array,
    optimal_grid_count,
    planar_array,
    random_reflectivities,
)
from .imaging import (
    cross_range_profile,
    detect_peaks,
    localization_report,
    music_pseudospectrum,
    subspace_split,
)
from .phase_recovery import (
    SimulatorOracle,
    recover_paraxial_six,
    recover_response_symmetric,
    recover_time_reversal,
)

log = logging.getLogger(__name__)

BUDGET = {
    "general": lambda n: 3 * n - 2,
    "symmetric": lambda n: 3 * n - 2,
    "paraxial-six": lambda n: 6,
    "full-phase-baseline": lambda n: n,
}


@dataclass
class RunManifest:
    config_hash: str
    seeds: dict
    illuminations: dict  # cell name -> number of illuminations used
    budget: int
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self):
        # wall time is left out so that manifests are reproducible byte for byte
        return {
            "config_hash": self.config_hash,
            "seeds": self.seeds,
            "illuminations": self.illuminations,
            "budget": self.budget,
            "outputs": self.outputs,
        }


@dataclass
class CellResult:
    name: str
    range: float
    epsilon: float
    trial: int
    illuminations: int
    operator: np.ndarray
    pseudospectrum: object
    report: object
    cross_range_peaks: list


def build_geometry(cfg: ExperimentConfig) -> ArrayGeometry:
    g = cfg.geometry
    kappa = 2 * np.pi / g.wavelength
    if g.layout == "planar":
        return planar_array(g.n, g.aperture, wavenumber=kappa)
    return linear_array(g.n, aperture=g.aperture, wavenumber=kappa)


def build_grid(cfg: ExperimentConfig, geom: ArrayGeometry, range_) -> ImagingGrid:
    gr = cfg.grid
    nx = gr.nx
    if nx is None:
        nx = optimal_grid_count(geom, range_, gr.window_length)
    return ImagingGrid.window(geom, range_, nx, gr.nz, gr.hx, gr.hz)


def build_scene(cfg: ExperimentConfig, grid: ImagingGrid) -> Scene:
    cx = (grid.shape[0] - 1) // 2
    cz = (grid.shape[1] - 1) // 2 if len(grid.shape) > 1 else 0
    idx = []
    for pos in cfg.scene.positions:
        ix = cx + int(pos[0])
        iz = cz + (int(pos[1]) if len(pos) > 1 else 0)
        if not (0 <= ix < grid.shape[0]) or (len(grid.shape) > 1 and not 0 <= iz < grid.shape[1]):
            raise ConfigError(f"scene position {pos} falls outside the image window")
        idx.append(grid.ravel(ix, iz))
    if cfg.scene.reflectivities is None:
        rng = np.random.default_rng([cfg.scene_seed, 0])
        amps = random_reflectivities(len(idx), rng)
    else:
        amps = [complex(*r) for r in cfg.scene.reflectivities]
    return Scene.from_indices(grid.k, idx, amps)


def cell_seed(master, index) -> int:
    """Independent per-cell stream derived from (master seed, cell index)."""
    return int(np.random.SeedSequence([master, 1, index]).generate_state(1)[0])


def recover(protocol, oracle, geom, range_):
    """Run one protocol against an oracle; returns the matrix to image."""
    if protocol == "general":
        return recover_time_reversal(oracle, geom.n).matrix
    if protocol == "symmetric":
        return recover_response_symmetric(oracle, geom.n).matrix
    if protocol == "paraxial-six":
        return recover_paraxial_six(oracle, geom, range_)[1].entries
    raise ConfigError(f"protocol {protocol!r} does not recover from intensities")


def image(matrix, geom, grid, scene, rank):
    split = subspace_split(matrix, rank=rank)
    ps = music_pseudospectrum(split, geom, grid)
    m = scene.m
    peaks = detect_peaks(ps, top=m)
    report = localization_report(peaks.indices, scene, grid)
    profile_peaks = detect_peaks(cross_range_profile(ps), top=m).indices
    return ps, report, profile_peaks


def run_cell(cfg, geom, index, range_, eps, trial) -> CellResult:
    grid = build_grid(cfg, geom, range_)
    scene = build_scene(cfg, grid)
    assemble = assemble_response_paraxial if cfg.model == "paraxial" else assemble_response_born
    p = assemble(geom, grid, scene)
    if cfg.protocol == "full-phase-baseline":
        matrix, count = p.entries, geom.n
    else:
        oracle = SimulatorOracle(p, eps, cell_seed(cfg.noise_seed, index), cfg.noise.mode)
        matrix = recover(cfg.protocol, oracle, geom, range_)
        count = oracle.calls
    rank = cfg.rank if cfg.rank is not None else scene.m
    ps, report, profile_peaks = image(matrix, geom, grid, scene, rank)
    name = f"cell{index:03d}_L{range_:g}_eps{eps:g}_t{trial}"
    return CellResult(name, range_, eps, trial, count, matrix, ps, report, profile_peaks)


def write_pseudospectrum(ps, grid, directory, formats):
    directory = Path(directory)
    out = []
    if "csv" in formats:
        rows = []
        for k, v in enumerate(ps.values):
            ix, iz = grid.unravel(k)
            rows.append((ix, iz, repr(float(v))))
        out.append(io._write_rows(directory / "pseudospectrum.csv", ["ix", "iz", "value"], rows))
    if "pgm" in formats:
        out.append(write_pgm(ps.as_image(), directory / "pseudospectrum.pgm"))
    return out


def write_pgm(image, path):
    """Plain (ASCII) 8-bit PGM; rows are range, columns cross-range."""
    img = np.asarray(image, float)
    img = img.T if img.ndim == 2 else img[None, :]
    top = img.max()
    pix = np.zeros(img.shape, int) if top <= 0 else np.rint(255 * img / top).astype(int)
    lines = ["P2", f"{pix.shape[1]} {pix.shape[0]}", "255"]
    lines += [" ".join(map(str, row)) for row in pix]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _threads():
    try:
        return max(1, int(os.environ.get("IMAGER_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, out_dir=None, write=True):
    """Run every (range, noise level, trial) cell of the sweep.

    Returns ``(manifest, results)``. With ``write`` the per-cell outputs and
    ``manifest.json`` are written below ``out_dir`` (default: the config's
    output directory).
    """
    start = time.perf_counter()
    cfg.validate()
    geom = build_geometry(cfg)
    cells = list(
        product(
            [float(L) for L in cfg.grid.ranges],
            [float(e) for e in cfg.noise.epsilon],
            range(cfg.noise.trials),
        )
    )
    jobs = [(i, L, e, t) for i, (L, e, t) in enumerate(cells)]
    with ThreadPoolExecutor(max_workers=min(_threads(), len(jobs))) as pool:
        results = list(pool.map(lambda j: run_cell(cfg, geom, *j), jobs))

    out_dir = Path(out_dir if out_dir is not None else cfg.output.directory)
    manifest = RunManifest(
        cfg.digest(),
        {
            "master": cfg.seed,
            "scene": cfg.scene_seed,
            "noise": {r.name: cell_seed(cfg.noise_seed, i) for i, r in enumerate(results)},
        },
        {r.name: r.illuminations for r in results},
        BUDGET[cfg.protocol](geom.n),
    )
    if write:
        for r in results:
            cell_dir = out_dir / r.name
            grid = build_grid(cfg, geom, r.range)
            files = write_pseudospectrum(r.pseudospectrum, grid, cell_dir, cfg.output.formats)
            files.append(io.export_matrix(r.operator, cell_dir / "operator.csv"))
            summary = {
                "range": r.range,
                "epsilon": r.epsilon,
                "trial": r.trial,
                "illuminations": r.illuminations,
                "cross_range_peaks": sorted(r.cross_range_peaks),
                "localization": r.report.to_dict(),
            }
            path = cell_dir / "report.json"
            path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
            files.append(path)
            manifest.outputs += [str(f.relative_to(out_dir)) for f in files]
        manifest.outputs.append("manifest.json")
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
        )
    manifest.wall_time = time.perf_counter() - start
    log.info("experiment finished: %d cells in %.2fs", len(results), manifest.wall_time)
    return manifest, results
