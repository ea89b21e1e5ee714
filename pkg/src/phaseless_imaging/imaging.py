"""MUSIC imaging from a (recovered) response or time reversal matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .geometry import ArrayGeometry, ImagingGrid, Scene, sensing_matrix

TAU_SV = 1e-3
PEAK_FLOOR = 3.0


@dataclass(frozen=True, eq=False)
class SubspaceSplit:
    singular_values: np.ndarray
    basis: np.ndarray  # N x M~, orthonormal right singular vectors
    rank: int

    @property
    def empty(self) -> bool:
        return self.rank == 0


@dataclass(frozen=True, eq=False)
class Pseudospectrum:
    values: np.ndarray
    shape: tuple
    normalization: float

    def as_image(self) -> np.ndarray:
        return self.values.reshape(self.shape)


@dataclass(frozen=True)
class Peaks:
    indices: list
    shortfall: bool = False
    degenerate: bool = False


@dataclass
class LocalizationReport:
    detected: list
    matched: list = field(default_factory=list)  # (detected, true)
    misses: list = field(default_factory=list)
    ghosts: list = field(default_factory=list)
    cross_range_errors: list = field(default_factory=list)  # units of h_x
    range_errors: list = field(default_factory=list)  # units of h_z
    nearest_distances: list = field(default_factory=list)  # cells, per true scatterer

    @property
    def exact(self) -> bool:
        return (
            not self.misses
            and not self.ghosts
            and all(e == 0 for e in self.cross_range_errors + self.range_errors)
        )

    @property
    def total_error(self) -> float:
        """Sum over true scatterers of the grid distance to the nearest detection."""
        return float(sum(self.nearest_distances))

    def to_dict(self):
        return {
            "detected": [int(i) for i in self.detected],
            "matched": [[int(d), int(t)] for d, t in self.matched],
            "misses": [int(i) for i in self.misses],
            "ghosts": [int(i) for i in self.ghosts],
            "cross_range_errors": [int(e) for e in self.cross_range_errors],
            "range_errors": [int(e) for e in self.range_errors],
            "nearest_distances": [float(d) for d in self.nearest_distances],
            "exact": self.exact,
        }


def subspace_split(a, rank=None, tau_sv=TAU_SV) -> SubspaceSplit:
    """SVD signal subspace of ``a``.

    With ``rank`` given it is used as is; otherwise the rank counts singular
    values above ``tau_sv * sigma_1``.
    """
    a = np.asarray(getattr(a, "entries", a))
    if not np.all(np.isfinite(a)):
        raise PreconditionError("matrix has non-finite entries")
    n = a.shape[1]
    _, s, vh = np.linalg.svd(a)
    if rank is not None:
        if not 0 <= rank < n:
            raise PreconditionError(f"known rank {rank} must be below N = {n}")
        m = int(rank)
    else:
        m = int(np.sum(s > tau_sv * s[0])) if s[0] > 0 else 0
    if s[0] == 0:
        m = 0
    return SubspaceSplit(s, vh[:m].conj().T, m)


def noise_space_residual(split: SubspaceSplit, steering) -> np.ndarray:
    """Norm of the noise-space component of each steering vector.

    The signal space of a symmetric P (and of P* P) is spanned by the
    conjugated Green's function vectors, so the projection acts on conj(g);
    equivalently g - sum_j (g^T V_j) conj(V_j).
    """
    g = np.conj(np.asarray(steering))
    v = split.basis
    residual = g - v @ (v.conj().T @ g)
    return np.linalg.norm(residual, axis=0)


def music_pseudospectrum(
    split: SubspaceSplit, geom: ArrayGeometry, grid: ImagingGrid, steering=None
) -> Pseudospectrum:
    """min_j ||proj g(y_j)|| / ||proj g(y_s)|| over the grid.

    Grid points whose projection vanishes (to machine precision) take the
    maximal value 1.
    """
    if split.empty:
        raise PreconditionError("empty signal space: nothing to image")
    g = sensing_matrix(geom, grid) if steering is None else steering
    norms = noise_space_residual(split, g)
    floor = np.finfo(float).eps * max(norms.max(), np.finfo(float).tiny)
    norms = np.maximum(norms, floor)
    num = norms.min()
    return Pseudospectrum(num / norms, grid.shape, float(num))


def music_noise_sum(split: SubspaceSplit, geom: ArrayGeometry, grid: ImagingGrid, vh_full):
    """Classical form 1 / sum_{j > M} |g^T V_j|^2 using all noise singular vectors.

    ``vh_full`` is the full right singular matrix (rows V_j^*) of the imaged matrix.
    """
    g = sensing_matrix(geom, grid)
    noise = vh_full[split.rank :].conj().T
    return 1.0 / np.sum(np.abs(g.T @ noise) ** 2, axis=1)


def _local_maxima(values, shape):
    img = values.reshape(shape)
    mask = np.ones(img.shape, bool)
    for axis in range(img.ndim):
        for shift in (1, -1):
            nb = np.roll(img, shift, axis=axis)
            edge = [slice(None)] * img.ndim
            edge[axis] = 0 if shift == 1 else -1
            nb[tuple(edge)] = -np.inf
            mask &= img >= nb
    return np.flatnonzero(mask.ravel())


def detect_peaks(ps: Pseudospectrum, top=None, floor_factor=None) -> Peaks:
    """Local maxima on the grid graph, ranked by value (ties: lowest index).

    ``top`` keeps the strongest ``top`` maxima; ``floor_factor`` keeps those
    above ``floor_factor * median``. Both may be combined.
    """
    values = np.asarray(ps.values)
    if values.size == 0:
        raise PreconditionError("empty pseudospectrum")
    cand = _local_maxima(values, ps.shape)
    order = cand[np.lexsort((cand, -values[cand]))]
    if floor_factor is not None:
        order = order[values[order] > floor_factor * np.median(values)]
    shortfall = False
    if top is not None:
        shortfall = len(order) < top
        order = order[:top]
    degenerate = len(order) > 1 and bool(np.any(np.diff(values[order]) == 0))
    return Peaks([int(i) for i in order], shortfall, degenerate)


def cross_range_profile(ps: Pseudospectrum) -> Pseudospectrum:
    """Maximum over range for each cross-range column."""
    img = ps.as_image()
    prof = img if img.ndim == 1 else img.max(axis=1)
    return Pseudospectrum(prof, (len(prof),), ps.normalization)


def localization_report(detected, scene: Scene, grid: ImagingGrid, radius=1):
    """Greedy nearest matching of detections to true scatterers.

    A pair matches when both grid offsets are within ``radius`` cells.
    Detections are sorted by grid index, so the report does not depend on
    the order of peak heights.
    """
    truth = [int(t) for t in scene.support]
    detected = sorted(int(d) for d in detected)
    coords = {i: np.array(grid.unravel(i)) for i in set(truth) | set(detected)}

    pairs = []
    for d in detected:
        for t in truth:
            off = coords[d] - coords[t]
            if np.max(np.abs(off)) <= radius:
                pairs.append((float(np.abs(off).sum()), d, t))
    pairs.sort()
    used_d, used_t = set(), set()
    rep = LocalizationReport(detected)
    for _, d, t in pairs:
        if d in used_d or t in used_t:
            continue
        used_d.add(d)
        used_t.add(t)
        off = coords[d] - coords[t]
        rep.matched.append((d, t))
        rep.cross_range_errors.append(int(off[0]))
        rep.range_errors.append(int(off[1]))
    rep.misses = [t for t in truth if t not in used_t]
    rep.ghosts = [d for d in detected if d not in used_d]
    for t in truth:
        if detected:
            rep.nearest_distances.append(
                float(min(np.linalg.norm(coords[d] - coords[t]) for d in detected))
            )
        else:
            rep.nearest_distances.append(float(np.inf))
    return rep
