import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_scene, rel_err
from phaseless_imaging.errors import PreconditionError
from phaseless_imaging.forward import (
    IntensityRecord,
    apply_noise,
    assemble_response_born,
    assemble_response_paraxial,
    distorted_reflectivity,
    geometric_factors,
    hankel_from_scene,
    hankel_matrix,
    measure_intensities,
)
from phaseless_imaging.geometry import (
    ImagingGrid,
    Scene,
    green,
    green_vector,
    linear_array,
)


def response_loop(geom, grid, scene):
    """Direct double loop over receivers and sources."""
    n = geom.n
    p = np.zeros((n, n), complex)
    for r in range(n):
        for s in range(n):
            for j in scene.support:
                xi = grid.points[j]
                p[r, s] += (
                    scene.reflectivity[j]
                    * green(geom.positions[r], xi, geom.wavenumber)
                    * green(xi, geom.positions[s], geom.wavenumber)
                )
    return p


def response_parax0(geom, grid, scene):
    """Second-order expansion before splitting the quadratic terms."""
    kappa, L = geom.wavenumber, grid.range
    x = geom.positions[:, :2]
    p = np.zeros((geom.n, geom.n), complex)
    for j in scene.support:
        d2 = np.sum((x - grid.points[j, :2]) ** 2, axis=1)
        p += scene.reflectivity[j] * np.exp(1j * kappa * (d2[:, None] + d2[None, :]) / (2 * L))
    return np.exp(2j * kappa * L) / (4 * np.pi * L) ** 2 * p


def test_born_matches_double_loop(rng):
    geom = linear_array(8, pitch=15.0)
    grid = ImagingGrid.window(geom, 400.0, 8, 4)
    assert grid.k == 32
    scene = random_scene(grid, 3, rng)
    p = assemble_response_born(geom, grid, scene)
    assert rel_err(p.entries, response_loop(geom, grid, scene)) < 1e-12


def test_born_single_scatterer_rank_one(small_setup):
    geom, grid, _ = small_setup
    scene = Scene.from_indices(grid.k, [5], [1.0])
    g = green_vector(geom, grid.points[5])
    p = assemble_response_born(geom, grid, scene).entries
    np.testing.assert_allclose(p, np.outer(g, g), rtol=1e-14)
    s = np.linalg.svd(p, compute_uv=False)
    assert s[1] < 1e-12 * s[0]


def test_born_empty_scene(small_setup):
    geom, grid, _ = small_setup
    with pytest.warns(UserWarning, match="empty scene"):
        p = assemble_response_born(geom, grid, Scene(np.zeros(grid.k)))
    assert not p.entries.any()
    assert p.status == "empty-scene"


def test_born_symmetry_and_rank(rng):
    geom = linear_array(31, pitch=20.0)
    grid = ImagingGrid.window(geom, 3000.0, 21, 11)
    for m in (1, 3, 5):
        p = assemble_response_born(geom, grid, random_scene(grid, m, rng))
        assert p.symmetric
        assert rel_err(p.entries.T, p.entries) < 1e-14
        s = np.linalg.svd(p.entries, compute_uv=False)
        assert np.sum(s > 1e-10 * s[0]) == m


def test_born_separate_receivers(small_setup):
    geom, grid, scene = small_setup
    rx = linear_array(5, pitch=9.0, start=3.0)
    p = assemble_response_born(geom, grid, scene, receivers=rx)
    assert p.entries.shape == (5, geom.n) and not p.symmetric
    expected = sum(
        scene.reflectivity[k]
        * green(rx.positions[2], grid.points[k], geom.wavenumber)
        * green(grid.points[k], geom.positions[4], geom.wavenumber)
        for k in scene.support
    )
    assert p.entries[2, 4] == pytest.approx(expected, rel=1e-13)


def test_scaling_by_complex_constant(small_setup, rng):
    geom, grid, scene = small_setup
    c = 0.7 - 1.3j
    p = assemble_response_born(geom, grid, scene).entries
    pc = assemble_response_born(geom, grid, Scene(c * scene.reflectivity)).entries
    np.testing.assert_allclose(pc, c * p, rtol=1e-13)
    f = rng.normal(size=geom.n) + 1j * rng.normal(size=geom.n)
    np.testing.assert_allclose(
        measure_intensities(pc, f).intensities,
        abs(c) ** 2 * measure_intensities(p, f).intensities,
        rtol=1e-12,
    )


def test_geometric_factors_magnitude():
    geom = linear_array(11, aperture=300.0)
    c = geometric_factors(geom, 5000.0).c
    np.testing.assert_allclose(np.abs(c), 1 / (4 * np.pi * 5000.0), rtol=1e-14)


def test_distorted_reflectivity_keeps_magnitude(rng):
    geom = linear_array(11, aperture=300.0)
    grid = ImagingGrid.window(geom, 5000.0, 21)
    scene = random_scene(grid, 4, rng)
    rt = distorted_reflectivity(scene, grid, geom.wavenumber)
    np.testing.assert_allclose(np.abs(rt), np.abs(scene.reflectivity), rtol=1e-15)


def test_paraxial_matches_expansion_chain(rng):
    geom = linear_array(21, aperture=400.0)
    grid = ImagingGrid.window(geom, 20000.0, 31)
    scene = random_scene(grid, 4, rng)
    pp = assemble_response_paraxial(geom, grid, scene).entries
    assert rel_err(pp, response_parax0(geom, grid, scene)) < 1e-10


def test_paraxial_scatterer_on_axis(rng):
    geom = linear_array(15, aperture=300.0)
    grid = ImagingGrid.window(geom, 10000.0, 11)
    alpha = 0.3 + 0.8j
    scene = Scene.from_indices(grid.k, [5], [alpha])
    assert grid.points[5, 0] == 0.0
    c = geometric_factors(geom, 10000.0).c
    pp = assemble_response_paraxial(geom, grid, scene).entries
    np.testing.assert_allclose(pp, np.outer(c, c) * alpha, rtol=1e-14)


def test_paraxial_requires_flat_grid(small_setup):
    geom, grid, scene = small_setup
    with pytest.raises(PreconditionError):
        assemble_response_paraxial(geom, grid, scene)


def test_paraxial_warns_outside_regime():
    geom = linear_array(11, aperture=2000.0)
    grid = ImagingGrid.window(geom, 2000.0, 11)
    scene = Scene.from_indices(grid.k, [3], [1.0])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        p = assemble_response_paraxial(geom, grid, scene)
    assert any("validity regime" in str(w.message) for w in caught)
    assert np.all(np.isfinite(p.entries))


def test_paraxial_error_decreases_with_range(rng):
    geom = linear_array(101, aperture=2000.0)
    amps = np.exp(2j * np.pi * rng.uniform(size=4))
    errors = []
    for L in (10000.0, 20000.0, 50000.0, 100000.0):
        grid = ImagingGrid.from_axes(L, (np.arange(61) - 30) * 20.0)
        scene = Scene.from_indices(grid.k, [10, 23, 33, 45], amps)
        p = assemble_response_born(geom, grid, scene).entries
        pp = assemble_response_paraxial(geom, grid, scene).entries
        errors.append(rel_err(pp, p))
    assert all(a > b for a, b in zip(errors, errors[1:]))


def test_processed_paraxial_is_hankel(rng):
    geom = linear_array(16, aperture=300.0)
    grid = ImagingGrid.window(geom, 20000.0, 25)
    scene = random_scene(grid, 5, rng)
    c = geometric_factors(geom, 20000.0).c
    h = assemble_response_paraxial(geom, grid, scene).entries / np.outer(c, c)
    n = geom.n
    for d in range(2 * n - 1):
        diag = np.array([h[r, d - r] for r in range(max(0, d - n + 1), min(d, n - 1) + 1)])
        np.testing.assert_allclose(diag, diag[0], rtol=1e-10, atol=1e-12 * abs(h).max())


def test_paraxial_factorization(rng):
    geom = linear_array(16, aperture=300.0)
    grid = ImagingGrid.window(geom, 20000.0, 25)
    scene = random_scene(grid, 5, rng)
    d = geometric_factors(geom, 20000.0).d
    hd = hankel_from_scene(geom, grid, scene)
    pp = assemble_response_paraxial(geom, grid, scene).entries
    assert rel_err(d @ hd.matrix @ d, pp) < 1e-12


def test_hankel_constant_for_on_axis_scatterer():
    geom = linear_array(12, aperture=200.0)
    grid = ImagingGrid.window(geom, 8000.0, 9)
    scene = Scene.from_indices(grid.k, [4], [2.0 - 1j])
    xi = hankel_from_scene(geom, grid, scene).xi
    assert len(xi) == 23
    np.testing.assert_allclose(xi, xi[0], rtol=1e-14)


def test_hankel_is_dft_at_optimal_sampling(rng):
    n = 32
    a, L = 640.0, 10000.0
    geom = linear_array(n, pitch=a / n, start=0.0)  # x_s = s a / N
    hx = geom.wavelength * L / a
    grid = ImagingGrid.from_axes(L, np.arange(1, n + 1) * hx, hx=hx)  # x'_j = j b / K
    scene = Scene(rng.normal(size=n) + 1j * rng.normal(size=n))
    hd = hankel_from_scene(geom, grid, scene)
    assert hd.lam == pytest.approx(2 * np.pi, rel=1e-14)
    rt = distorted_reflectivity(scene, grid, geom.wavenumber)
    wrapped = np.zeros(n, complex)
    wrapped[np.arange(1, n + 1) % n] = rt
    np.testing.assert_allclose(hd.xi[:n], np.fft.fft(wrapped), rtol=1e-10, atol=1e-10)


def test_hankel_rejects_non_linear(small_setup):
    geom, _, _ = small_setup
    grid = ImagingGrid.window(geom, 500.0, 8, 3)
    with pytest.raises(PreconditionError):
        hankel_from_scene(geom, grid, Scene(np.zeros(grid.k)))


def test_hankel_matrix_layout():
    h = hankel_matrix(np.arange(5))
    np.testing.assert_array_equal(h, [[0, 1, 2], [1, 2, 3], [2, 3, 4]])


def test_measure_intensities_basic(rng):
    p = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert not measure_intensities(p, np.zeros(4)).intensities.any()
    e1 = np.eye(4)[0]
    np.testing.assert_array_equal(measure_intensities(np.eye(4), e1).intensities, e1)
    f = rng.normal(size=4) + 1j * rng.normal(size=4)
    direct = np.array([abs(sum(p[i, k] * f[k] for k in range(4))) ** 2 for i in range(4)])
    np.testing.assert_allclose(measure_intensities(p, f).intensities, direct, rtol=1e-13)
    with pytest.raises(PreconditionError):
        measure_intensities(p, np.ones(3))


def test_noise_zero_level_is_identity():
    rec = IntensityRecord(np.ones(3), np.array([1.0, 2.0, 3.0]))
    assert apply_noise(rec, 0.0, 1) is rec


def test_noise_zero_intensity_stays_zero():
    rec = IntensityRecord(np.ones(3), np.array([0.0, 2.0, 0.0]))
    out = apply_noise(rec, 0.5, 3).intensities
    assert out[0] == 0.0 and out[2] == 0.0


def test_noise_uniform_law():
    rec = IntensityRecord(np.ones(1), np.ones(1_000_000))
    out = apply_noise(rec, 0.1, 2024).intensities
    assert abs(out.mean() - 1.0) < 1e-3
    assert out.min() >= 0.9 and out.max() <= 1.1


def test_noise_deterministic_and_validated():
    rec = IntensityRecord(np.ones(5), np.arange(5.0))
    a = apply_noise(rec, 0.2, 9).intensities
    b = apply_noise(rec, 0.2, 9).intensities
    np.testing.assert_array_equal(a, b)
    for bad in (-0.1, 1.0):
        with pytest.raises(PreconditionError):
            apply_noise(rec, bad, 0)


def test_noise_additive_reading():
    rec = IntensityRecord(np.ones(1), np.ones(100_000))
    out = apply_noise(rec, 0.1, 5, mode="additive").intensities
    assert abs(out.mean() - 2.0) < 2e-3


@settings(max_examples=50)
@given(
    st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=20),
    st.floats(0, 0.99),
    st.integers(0, 2**32 - 1),
)
def test_noise_stays_in_interval(beta, eps, seed):
    beta = np.array(beta)
    out = apply_noise(IntensityRecord(np.ones(1), beta), eps, seed).intensities
    assert np.all(out >= (1 - eps) * beta * (1 - 1e-15))
    assert np.all(out <= (1 + eps) * beta * (1 + 1e-15))
