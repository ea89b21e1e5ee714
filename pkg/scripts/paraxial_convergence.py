"""Relative error of the paraxial response against the Born response as the range grows."""

import warnings

import numpy as np

from phaseless_imaging.forward import assemble_response_born, assemble_response_paraxial
from phaseless_imaging.geometry import (
    ImagingGrid,
    Scene,
    fresnel_diagnostics,
    linear_array,
    random_reflectivities,
)


def main():
    geom = linear_array(101, aperture=2000.0)
    offsets = np.array([-20, -7, 3, 15]) * 20.0
    amps = random_reflectivities(len(offsets), np.random.default_rng(7))
    print(f"{'L':>8} {'F':>8} {'error':>10} {'bound':>10}  regime")
    for L in (5_000.0, 10_000.0, 20_000.0, 50_000.0, 100_000.0, 200_000.0):
        grid = ImagingGrid.from_axes(L, np.arange(-30, 31) * 20.0, hx=20.0)
        idx = [int(np.argmin(np.abs(grid.points[:, 0] - x))) for x in offsets]
        scene = Scene.from_indices(grid.k, idx, amps)
        p = assemble_response_born(geom, grid, scene).entries
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            q = assemble_response_paraxial(geom, grid, scene).entries
        d = fresnel_diagnostics(geom, grid)
        err = np.linalg.norm(q - p) / np.linalg.norm(p)
        print(f"{L:>8g} {d.fresnel_number:>8.1f} {err:>10.3e} {d.paraxial_error_bound:>10.3e}  {d.regime.value}")


if __name__ == "__main__":
    main()
