"""Forward model: response matrices and intensity-only measurements."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hankel

from .errors import PreconditionError
from .geometry import (
    ArrayGeometry,
    ImagingGrid,
    Regime,
    Scene,
    fresnel_diagnostics,
    sensing_matrix,
)

BORN = "born"
PARAXIAL = "paraxial"


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    entries: np.ndarray
    model: str = BORN
    symmetric: bool = True
    status: str = "ok"

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class GeometricFactors:
    """Known phase/amplitude factors C_t of the paraxial model."""

    c: np.ndarray

    @property
    def d(self) -> np.ndarray:
        return np.diag(self.c)


@dataclass(frozen=True, eq=False)
class HankelData:
    """Skew-diagonal values xi[n], n = 0..2N-2, and the setup parameter Lambda."""

    xi: np.ndarray
    lam: float

    @property
    def n(self) -> int:
        return (len(self.xi) + 1) // 2

    @property
    def matrix(self) -> np.ndarray:
        return hankel_matrix(self.xi)


@dataclass(frozen=True, eq=False)
class IntensityRecord:
    illumination: np.ndarray
    intensities: np.ndarray
    noise: float = 0.0


def hankel_matrix(xi) -> np.ndarray:
    """N x N matrix with entry (r, s) equal to xi[r + s]."""
    xi = np.asarray(xi)
    n = (len(xi) + 1) // 2
    return hankel(xi[:n], xi[n - 1 :])


def _entries(p):
    return p.entries if isinstance(p, ResponseMatrix) else np.asarray(p)


def assemble_response_born(
    geom: ArrayGeometry,
    grid: ImagingGrid,
    scene: Scene,
    receivers: ArrayGeometry | None = None,
) -> ResponseMatrix:
    """Single-scattering response P = G_r diag(rho) G_s^T.

    ``receivers`` defaults to the source array (co-located, symmetric P).
    """
    rho = scene.reflectivity
    if len(rho) != grid.k:
        raise PreconditionError("reflectivity length differs from grid size")
    rx = geom if receivers is None else receivers
    support = scene.support
    if len(support) == 0:
        warnings.warn("empty scene: response matrix is zero", stacklevel=2)
        return ResponseMatrix(
            np.zeros((rx.n, geom.n), complex), BORN, receivers is None, "empty-scene"
        )
    sub = ImagingGrid(
        grid.points[support], grid.range, grid.hx, grid.hz, (len(support),), grid.flat
    )
    g_src = sensing_matrix(geom, sub)
    g_rx = g_src if receivers is None else sensing_matrix(rx, sub)
    p = (g_rx * rho[support]) @ g_src.T
    return ResponseMatrix(p, BORN, receivers is None)


def geometric_factors(geom: ArrayGeometry, range_) -> GeometricFactors:
    """C_t = exp(i k L) exp(i k |x_t|^2 / 2L) / (4 pi L)."""
    kappa, L = geom.wavenumber, float(range_)
    x2 = np.sum(geom.positions[:, :2] ** 2, axis=1)
    c = np.exp(1j * kappa * L) * np.exp(1j * kappa * x2 / (2 * L)) / (4 * np.pi * L)
    return GeometricFactors(c)


def distorted_reflectivity(scene: Scene, grid: ImagingGrid, wavenumber) -> np.ndarray:
    """Reflectivities times the known-range quadratic phase exp(i k |y|^2 / L).

    The quadratic term is picked up on both the incoming and outgoing leg,
    hence |y|^2 / L rather than |y|^2 / 2L.
    """
    y2 = np.sum(grid.points[:, :2] ** 2, axis=1)
    return scene.reflectivity * np.exp(1j * wavenumber * y2 / grid.range)


def _require_flat(grid):
    if not grid.flat:
        raise PreconditionError("the paraxial model needs a flat image window")


def assemble_response_paraxial(
    geom: ArrayGeometry, grid: ImagingGrid, scene: Scene
) -> ResponseMatrix:
    """Paraxial (Fresnel) response C_r C_s sum_j rho~_j exp(-i k <x_s + x_r, y_j> / L)."""
    _require_flat(grid)
    if fresnel_diagnostics(geom, grid).regime is Regime.INVALID:
        warnings.warn(
            f"paraxial model outside its validity regime at L={grid.range}", stacklevel=2
        )
    kappa, L = geom.wavenumber, grid.range
    c = geometric_factors(geom, L).c
    rho_t = distorted_reflectivity(scene, grid, kappa)
    support = np.flatnonzero(rho_t)
    e = np.exp(-1j * kappa * (geom.positions[:, :2] @ grid.points[support, :2].T) / L)
    h = (e * rho_t[support]) @ e.T
    return ResponseMatrix(c[:, None] * h * c[None, :], PARAXIAL, True)


def hankel_from_scene(geom: ArrayGeometry, grid: ImagingGrid, scene: Scene) -> HankelData:
    """Skew-diagonal values of the processed paraxial response for a linear array.

    With x_s = x_0 + s h the processed entry (r, s) only depends on r + s:
    xi[n] = sum_j rho~_j exp(-i k (2 x_0 + n h) y_j / L). Lambda uses the
    array length N h and window length K h_x.
    """
    _require_flat(grid)
    if not geom.is_linear or np.any(grid.points[:, 1] != 0.0):
        raise PreconditionError("Hankel data needs a uniform linear array and a 1-D window")
    kappa, L, n = geom.wavenumber, grid.range, geom.n
    x0, h = geom.positions[0, 0], geom.pitch
    rho_t = distorted_reflectivity(scene, grid, kappa)
    support = np.flatnonzero(rho_t)
    offsets = 2 * x0 + np.arange(2 * n - 1) * h
    xi = np.exp(-1j * kappa * np.outer(offsets, grid.points[support, 0]) / L) @ rho_t[support]
    lam = kappa * (n * h) * grid.extent / (L * grid.k)
    return HankelData(xi, float(lam))


def measure_intensities(p, f) -> IntensityRecord:
    """Noiseless per-receiver intensities |P f|^2."""
    entries = _entries(p)
    f = np.asarray(f, dtype=complex)
    if f.shape != (entries.shape[1],):
        raise PreconditionError(
            f"illumination has shape {f.shape}, expected ({entries.shape[1]},)"
        )
    b = entries @ f
    return IntensityRecord(f, b.real**2 + b.imag**2)


def apply_noise(record: IntensityRecord, epsilon, seed, mode="replace", rng=None):
    """Multiplicative uniform noise on every receiver.

    ``replace`` draws beta_i ~ U[(1-eps) beta_i, (1+eps) beta_i]; ``additive``
    adds such a draw to beta_i instead. Pass ``rng`` to continue an existing
    stream; otherwise a generator is built from ``seed``.
    """
    if not 0 <= epsilon < 1:
        raise PreconditionError(f"noise level must lie in [0, 1), got {epsilon}")
    if mode not in ("replace", "additive"):
        raise PreconditionError(f"unknown noise mode {mode!r}")
    if epsilon == 0 and mode == "replace":
        return record
    rng = np.random.default_rng(seed) if rng is None else rng
    u = rng.uniform(1 - epsilon, 1 + epsilon, size=record.intensities.shape)
    beta = record.intensities * u
    if mode == "additive":
        beta = record.intensities + beta
    return IntensityRecord(record.illumination, beta, float(epsilon))
