import warnings

import numpy as np
import pytest

from phaseless_imaging.geometry import ImagingGrid, Scene, linear_array, random_reflectivities


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def phase_aligned_err(est, ref):
    """min over theta of ||exp(i theta) est - ref|| / ||ref||."""
    theta = np.angle(np.vdot(est, ref))
    return rel_err(np.exp(1j * theta) * est, ref)


def random_scene(grid, m, rng, spacing=0):
    """m random scatterers; with spacing > 0 any two are more than spacing cells apart."""
    while True:
        idx = rng.choice(grid.k, size=m, replace=False)
        cells = np.array([grid.unravel(k) for k in idx])
        gaps = np.abs(cells[:, None, :] - cells[None, :, :]).max(axis=-1)
        if m == 1 or gaps[np.triu_indices(m, 1)].min() > spacing:
            break
    return Scene.from_indices(grid.k, idx, random_reflectivities(m, rng))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_setup(rng):
    """N = 8 array, 8 x 4 window at L = 500, three scatterers."""
    geom = linear_array(8, pitch=20.0)
    grid = ImagingGrid.window(geom, 500.0, 8, 4)
    return geom, grid, random_scene(grid, 3, rng)


@pytest.fixture(autouse=True)
def _quiet_regime_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="paraxial model outside")
        yield


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
