"""Command line entry point ``imager``.

Subcommands: ``simulate``, ``recover``, ``image`` and ``experiment``.
Exit codes: 0 success, 2 configuration error, 3 broken phase chain,
4 I/O or data-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .config import PROTOCOLS, load_config
from .errors import (
    ConfigError,
    ConsistencyError,
    ParseError,
    PhaseChainError,
    PreconditionError,
)
from .experiment import (
    build_geometry,
    build_grid,
    build_scene,
    cell_seed,
    image,
    recover,
    run_experiment,
    write_pseudospectrum,
)
from .forward import assemble_response_born, assemble_response_paraxial, geometric_factors
from .phase_recovery import (
    SimulatorOracle,
    general_plan,
    paraxial_six_plan,
    symmetric_plan,
)

log = logging.getLogger("imager")

EXIT_CONFIG, EXIT_CONDITIONING, EXIT_IO = 2, 3, 4


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "protocol", None):
        cfg.protocol = args.protocol
    if getattr(args, "epsilon", None) is not None:
        cfg.noise.epsilon = [args.epsilon]
    if getattr(args, "format", None):
        cfg.output.formats = [args.format]
    return cfg.validate()


def _out(args, cfg):
    return Path(args.out if args.out is not None else cfg.output.directory)


def _plan(protocol, geom, range_):
    if protocol == "general":
        return general_plan(geom.n).vectors
    if protocol == "symmetric":
        return symmetric_plan(geom.n).vectors
    if protocol == "paraxial-six":
        return paraxial_six_plan(geometric_factors(geom, range_).c).vectors
    return general_plan(geom.n).vectors[: geom.n]


def _response(cfg, geom, grid, scene):
    assemble = assemble_response_paraxial if cfg.model == "paraxial" else assemble_response_born
    return assemble(geom, grid, scene)


def cmd_simulate(args):
    cfg = _config(args)
    geom = build_geometry(cfg)
    out = _out(args, cfg)
    index = 0
    for L in cfg.grid.ranges:
        grid = build_grid(cfg, geom, float(L))
        scene = build_scene(cfg, grid)
        p = _response(cfg, geom, grid, scene)
        for eps in cfg.noise.epsilon:
            cell = out / f"sim_L{float(L):g}_eps{float(eps):g}"
            oracle = SimulatorOracle(p, eps, cell_seed(cfg.noise_seed, index), cfg.noise.mode)
            plan = _plan(cfg.protocol, geom, float(L))
            records = [oracle(f) for f in plan]
            io.export_matrix(p.entries, cell / "response.csv")
            io.export_plan(plan, cell / "plan.csv")
            io.export_intensities(records, cell / "intensities.csv")
            print(cell)
            index += 1
    return 0


def cmd_recover(args):
    cfg = _config(args)
    geom = build_geometry(cfg)
    L = float(cfg.grid.ranges[0])
    if cfg.protocol == "full-phase-baseline":
        raise ConfigError("full-phase-baseline has nothing to recover")
    if args.data is not None:
        data = Path(args.data)
        oracle = io.import_intensities(data / "intensities.csv", data / "plan.csv")
    else:
        grid = build_grid(cfg, geom, L)
        p = _response(cfg, geom, grid, build_scene(cfg, grid))
        eps = float(cfg.noise.epsilon[0])
        oracle = SimulatorOracle(p, eps, cell_seed(cfg.noise_seed, 0), cfg.noise.mode)
    matrix = recover(cfg.protocol, oracle, geom, L)
    path = io.export_matrix(matrix, _out(args, cfg) / "recovered.csv")
    print(json.dumps({"output": str(path), "illuminations": oracle.calls}))
    return 0


def cmd_image(args):
    cfg = _config(args)
    geom = build_geometry(cfg)
    L = float(cfg.grid.ranges[0])
    grid = build_grid(cfg, geom, L)
    scene = build_scene(cfg, grid)
    matrix = io.import_matrix(args.matrix)
    if matrix.shape != (geom.n, geom.n):
        raise ConsistencyError(f"matrix is {matrix.shape}, array has {geom.n} elements")
    rank = cfg.rank if cfg.rank is not None else scene.m
    ps, report, profile_peaks = image(matrix, geom, grid, scene, rank)
    out = _out(args, cfg)
    write_pseudospectrum(ps, grid, out, cfg.output.formats)
    summary = {"cross_range_peaks": sorted(profile_peaks), "localization": report.to_dict()}
    (out / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary["localization"]))
    return 0


def cmd_experiment(args):
    cfg = _config(args)
    manifest, results = run_experiment(cfg, _out(args, cfg))
    for r in results:
        rep = r.report
        print(
            f"{r.name}: illuminations={r.illuminations} exact={rep.exact} "
            f"misses={len(rep.misses)} ghosts={len(rep.ghosts)}"
        )
    print(f"wall time {manifest.wall_time:.2f}s")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="imager", description="Array imaging from intensity-only measurements."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, protocol=True):
        p.add_argument("--config", required=True, help="YAML experiment configuration")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output directory")
        if protocol:
            p.add_argument("--protocol", choices=PROTOCOLS)
            p.add_argument("--epsilon", type=float, help="single noise level")
        p.add_argument("--format", choices=("csv", "pgm"))

    p = sub.add_parser("simulate", help="write response matrices and intensity datasets")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recover", help="run a recovery protocol on live or recorded data")
    common(p)
    p.add_argument("--data", help="directory holding intensities.csv and plan.csv")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("image", help="MUSIC image of a stored matrix")
    common(p, protocol=False)
    p.add_argument("--matrix", required=True, help="matrix file (row,col,re,im)")
    p.set_defaults(func=cmd_image)

    p = sub.add_parser("experiment", help="full sweep from a configuration")
    common(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, PreconditionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhaseChainError as exc:
        print(f"conditioning abort: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except (OSError, ParseError, ConsistencyError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
