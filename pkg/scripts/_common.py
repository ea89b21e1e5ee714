"""Shared driver for the figure scripts: load a config, run the sweep, print a table."""

import argparse
from pathlib import Path

from phaseless_imaging.config import load_config
from phaseless_imaging.experiment import run_experiment

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(default_config, description):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--config", default=str(CONFIGS / default_config))
    parser.add_argument("--out", help="output directory (default: from the config)")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    manifest, results = run_experiment(cfg, args.out)
    print(f"{'L':>9} {'eps':>5} {'exact':>6} {'miss':>5} {'ghost':>6} {'error':>6}  cross-range peaks")
    for r in results:
        rep = r.report
        print(
            f"{r.range:>9g} {r.epsilon:>5g} {str(rep.exact):>6} {len(rep.misses):>5} "
            f"{len(rep.ghosts):>6} {rep.total_error:>6g}  {sorted(r.cross_range_peaks)}"
        )
    print(f"{len(results)} cells, {max(manifest.illuminations.values())} illuminations per cell, "
          f"{manifest.wall_time:.2f}s")
    return manifest, results
