"""Array, image window and scene definitions plus Green's function primitives.

All lengths are in units of the wavelength unless a different wavenumber is
passed explicitly; the default wavenumber is ``2*pi`` (wavelength 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .errors import DegenerateGridError, PreconditionError, SingularGreenError

TWO_PI = 2.0 * np.pi


def _max_extent(points):
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 2000:
        # the farthest pair lies on the hull of the (planar) array
        try:
            pts = pts[ConvexHull(pts[:, :2]).vertices]
        except Exception:  # collinear points: hull is degenerate
            pass
    return float(pdist(pts).max())


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Co-located sources/receivers on the plane z = 0.

    ``aperture`` is stored explicitly and validated against the maximum
    pairwise distance between transducers.
    """

    positions: np.ndarray
    wavenumber: float = TWO_PI
    aperture: float | None = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise PreconditionError("positions must be an (N, 3) array")
        if len(pos) < 1:
            raise PreconditionError("the array needs at least one transducer")
        if not self.wavenumber > 0:
            raise PreconditionError("wavenumber must be positive")
        if np.any(pos[:, 2] != 0.0):
            raise PreconditionError("all transducers must lie on the plane z = 0")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        extent = _max_extent(pos)
        if self.aperture is None:
            object.__setattr__(self, "aperture", extent)
        elif not np.isclose(self.aperture, extent, rtol=1e-9, atol=1e-12):
            raise PreconditionError(
                f"aperture {self.aperture} does not match array extent {extent}"
            )

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def wavelength(self) -> float:
        return TWO_PI / self.wavenumber

    @property
    def is_linear(self) -> bool:
        """True for arrays on the x axis with uniform spacing."""
        if self.n < 2:
            return True
        if np.any(self.positions[:, 1] != 0.0):
            return False
        steps = np.diff(self.positions[:, 0])
        return bool(steps[0] > 0 and np.allclose(steps, steps[0], rtol=1e-9, atol=0))

    @property
    def pitch(self) -> float:
        if self.n < 2:
            return 0.0
        return float(self.positions[1, 0] - self.positions[0, 0])


def linear_array(n, aperture=None, pitch=None, wavenumber=TWO_PI, start=None):
    """Uniform linear array on the x axis.

    Give either ``aperture`` (first-to-last distance) or ``pitch``. The array
    is centred at the origin unless ``start`` fixes the first element.
    """
    if (aperture is None) == (pitch is None):
        raise PreconditionError("give exactly one of aperture or pitch")
    if pitch is None:
        pitch = aperture / (n - 1) if n > 1 else 0.0
    x = np.arange(n) * pitch
    x = x - x[-1] / 2 if start is None else x + start
    pos = np.zeros((n, 3))
    pos[:, 0] = x
    return ArrayGeometry(pos, wavenumber)


def planar_array(n_side, side, wavenumber=TWO_PI):
    """Square ``n_side x n_side`` array of side length ``side`` centred at the origin."""
    u = np.linspace(-side / 2, side / 2, n_side)
    xx, yy = np.meshgrid(u, u, indexing="ij")
    pos = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(n_side * n_side)])
    return ArrayGeometry(pos, wavenumber)


@dataclass(frozen=True, eq=False)
class ImagingGrid:
    """Discretized image window.

    Points are stored flat with index ``k = ix * nz + iz`` where ``shape`` is
    ``(nx,)`` for flat windows and ``(nx, nz)`` otherwise.
    """

    points: np.ndarray
    range: float
    hx: float
    hz: float
    shape: tuple
    flat: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 1:
            raise PreconditionError("points must be a non-empty (K, 3) array")
        if np.any(pts[:, 2] <= 0):
            raise PreconditionError("grid points must have positive range")
        if self.flat and np.any(pts[:, 2] != self.range):
            raise PreconditionError("flat grid points must all sit at range L")
        if int(np.prod(self.shape)) != len(pts):
            raise PreconditionError("shape does not match the number of points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def extent(self) -> float:
        """Cross-range length b of the window (number of columns times h_x)."""
        return self.shape[0] * self.hx

    def unravel(self, index):
        """Grid index -> (ix, iz); iz is 0 for flat windows."""
        if len(self.shape) == 1:
            return int(index), 0
        ix, iz = np.unravel_index(int(index), self.shape)
        return int(ix), int(iz)

    def ravel(self, ix, iz=0):
        if len(self.shape) == 1:
            return int(ix)
        return int(np.ravel_multi_index((ix, iz), self.shape))

    @classmethod
    def from_axes(cls, range_, x, z=None, hx=None, hz=None):
        """Build a lattice from cross-range coordinates ``x`` and ranges ``z``.

        With ``z`` omitted the window is flat at ``range_``.
        """
        x = np.asarray(x, dtype=float)
        hx = hx if hx is not None else (float(x[1] - x[0]) if len(x) > 1 else 1.0)
        if z is None:
            pts = np.column_stack([x, np.zeros_like(x), np.full_like(x, range_)])
            return cls(pts, float(range_), float(hx), float(hz or 0.0), (len(x),), True)
        z = np.asarray(z, dtype=float)
        hz = hz if hz is not None else (float(z[1] - z[0]) if len(z) > 1 else 1.0)
        xx, zz = np.meshgrid(x, z, indexing="ij")
        pts = np.column_stack([xx.ravel(), np.zeros(xx.size), zz.ravel()])
        return cls(pts, float(range_), float(hx), float(hz), (len(x), len(z)), False)

    @classmethod
    def window(cls, geom: ArrayGeometry, range_, nx, nz=1, hx=None, hz=None):
        """Window centred at (0, 0, L) with resolution-limited mesh by default.

        h_x = lambda L / a and h_z = lambda L^2 / a^2. ``nz == 1`` gives a
        flat window.
        """
        lam, a = geom.wavelength, geom.aperture
        hx = lam * range_ / a if hx is None else hx
        hz = lam * range_**2 / a**2 if hz is None else hz
        x = (np.arange(nx) - (nx - 1) / 2) * hx
        if nz == 1:
            return cls.from_axes(range_, x, hx=hx, hz=hz)
        z = range_ + (np.arange(nz) - (nz - 1) / 2) * hz
        return cls.from_axes(range_, x, z, hx=hx, hz=hz)


@dataclass(frozen=True, eq=False)
class Scene:
    """Reflectivity vector over the grid; nonzero entries are the scatterers."""

    reflectivity: np.ndarray

    def __post_init__(self):
        rho = np.array(self.reflectivity, dtype=complex).ravel()
        rho.setflags(write=False)
        object.__setattr__(self, "reflectivity", rho)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.reflectivity)

    @property
    def m(self) -> int:
        return len(self.support)

    @classmethod
    def from_indices(cls, k, indices, amplitudes):
        indices = np.asarray(indices, dtype=int)
        if len(set(indices.tolist())) != len(indices):
            raise PreconditionError("scatterer indices must be distinct")
        if np.any((indices < 0) | (indices >= k)):
            raise PreconditionError("scatterer index outside the grid")
        rho = np.zeros(k, dtype=complex)
        rho[indices] = amplitudes
        return cls(rho)

    def check_against(self, geom: ArrayGeometry, grid: ImagingGrid):
        if len(self.reflectivity) != grid.k:
            raise PreconditionError("reflectivity length differs from grid size")
        if self.m >= geom.n:
            raise PreconditionError(
                f"{self.m} scatterers need at least {self.m + 1} transducers"
            )


def random_reflectivities(m, rng):
    """Unit-magnitude reflectivities with uniform random phase."""
    return np.exp(1j * rng.uniform(0.0, TWO_PI, size=m))


class Regime(str, Enum):
    FRESNEL = "Fresnel"
    FRAUNHOFER = "Fraunhofer"
    INVALID = "Invalid-paraxial"


@dataclass(frozen=True)
class FresnelDiagnostics:
    fresnel_number: float
    paraxial_error_bound: float
    regime: Regime


# --- Green's function ------------------------------------------------------


def green(x, y, wavenumber=TWO_PI):
    """Free-space Helmholtz Green's function exp(i k r) / (4 pi r)."""
    r = float(np.linalg.norm(np.subtract(x, y, dtype=float)))
    if r == 0.0:
        raise SingularGreenError("Green's function is singular at coincident points")
    return np.exp(1j * wavenumber * r) / (4 * np.pi * r)


def _green_block(sources, targets, wavenumber):
    r = np.linalg.norm(sources[:, None, :] - targets[None, :, :], axis=-1)
    hits = np.argwhere(r == 0.0)
    if len(hits):
        s, t = hits[0]
        raise SingularGreenError(
            f"grid point {t} coincides with transducer {s}", index=(int(s), int(t))
        )
    return np.exp(1j * wavenumber * r) / (4 * np.pi * r)


def green_vector(geom: ArrayGeometry, y) -> np.ndarray:
    """Signals received on the array from a point source at ``y``."""
    y = np.asarray(y, dtype=float).reshape(1, 3)
    try:
        return _green_block(geom.positions, y, geom.wavenumber)[:, 0]
    except SingularGreenError as exc:
        s = exc.index[0]
        raise SingularGreenError(f"point coincides with transducer {s}", index=s) from None


def sensing_matrix(geom: ArrayGeometry, grid: ImagingGrid) -> np.ndarray:
    """N x K matrix whose column j is the Green's function vector of grid point j."""
    return _green_block(geom.positions, grid.points, geom.wavenumber)


# --- Regime diagnostics ----------------------------------------------------


def fresnel_diagnostics(
    geom: ArrayGeometry,
    grid: ImagingGrid,
    fraunhofer_threshold=0.1,
    paraxial_threshold=0.01,
) -> FresnelDiagnostics:
    L = grid.range
    if not L > 0:
        raise PreconditionError("range must be positive")
    a = geom.aperture
    F = a**2 / (geom.wavelength * L)
    bound = 0.25 * F * (a / L) ** 2
    if F < fraunhofer_threshold:
        regime = Regime.FRAUNHOFER
    elif F >= 1 and bound < paraxial_threshold:
        regime = Regime.FRESNEL
    else:
        regime = Regime.INVALID
    return FresnelDiagnostics(F, bound, regime)


def optimal_grid_count(geom: ArrayGeometry, range_, window_length) -> int:
    """Number of window points when sampling at the resolution limit lambda L / a."""
    if not (range_ > 0 and window_length > 0):
        raise PreconditionError("range and window length must be positive")
    k = int(round(geom.aperture * window_length / (geom.wavelength * range_)))
    if k < 1:
        raise DegenerateGridError(f"window holds fewer than one resolution cell ({k})")
    return k
