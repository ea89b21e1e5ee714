"""Recovering phase information from intensity-only array data.

Three illumination protocols are provided:

* ``recover_time_reversal``: the time reversal matrix P*P from 3N-2
  illuminations, valid for any (also non-symmetric) response matrix.
* ``recover_response_symmetric``: P itself up to a global phase from the same
  3N-2 illuminations when sources and receivers are co-located.
* ``recover_paraxial_six``: the Hankel-structured processed response from six
  illuminations for a linear array and a flat scene in the paraxial regime.

Each protocol talks to an :class:`IntensityOracle`, which counts the
illuminations it serves.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import PhaseChainError, PreconditionError
from .forward import (
    IntensityRecord,
    ResponseMatrix,
    apply_noise,
    geometric_factors,
    hankel_matrix,
    measure_intensities,
)
from .geometry import ArrayGeometry

TAU_REF = 1e-8


class PlanKind(str, Enum):
    GENERAL = "General3N"
    SYMMETRIC = "Symmetric3N"
    PARAXIAL_SIX = "ParaxialSix"


class OperatorKind(str, Enum):
    TIME_REVERSAL = "TimeReversal"
    RESPONSE = "ResponseUpToPhase"
    HANKEL = "Hankel"


@dataclass(frozen=True, eq=False)
class IlluminationPlan:
    vectors: list
    kind: PlanKind

    def __len__(self):
        return len(self.vectors)


@dataclass
class ConditionReport:
    """Smallest relative reference magnitude met while chaining phases."""

    min_reference: float = np.inf
    flagged: list = field(default_factory=list)
    extra_illuminations: int = 0


@dataclass(frozen=True, eq=False)
class RecoveredOperator:
    matrix: np.ndarray
    kind: OperatorKind
    phase_convention: str
    condition_report: ConditionReport


class IntensityOracle:
    """Measurement source: illumination vector -> IntensityRecord.

    Wraps any callable and counts how many illuminations were requested.
    ``serial`` declares that concurrent queries are not supported.
    """

    def __init__(self, measure: Callable[[np.ndarray], IntensityRecord], serial=False):
        self._measure = measure
        self.serial = serial
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, f) -> IntensityRecord:
        with self._lock:
            index = self.calls
            self.calls += 1
        return self._query(np.asarray(f, dtype=complex), index)

    def _query(self, f, index):
        return self._measure(f)


class SimulatorOracle(IntensityOracle):
    """Intensities of a known response matrix, optionally with noise.

    Query number ``i`` draws its noise from a generator seeded with
    ``(seed, i)`` so a fixed sequence of queries is reproducible.
    """

    def __init__(self, p, epsilon=0.0, seed=0, noise_mode="replace"):
        super().__init__(None)
        self.p = p
        self.epsilon = float(epsilon)
        self.seed = int(seed)
        self.noise_mode = noise_mode
        self.records = []

    def _query(self, f, index):
        rec = measure_intensities(self.p, f)
        if self.epsilon > 0 or self.noise_mode != "replace":
            rng = np.random.default_rng([self.seed, index])
            rec = apply_noise(rec, self.epsilon, None, self.noise_mode, rng=rng)
        self.records.append(rec)
        return rec


# --- plans -----------------------------------------------------------------


def _unit(n, i):
    e = np.zeros(n, dtype=complex)
    e[i] = 1.0
    return e


def general_plan(n) -> IlluminationPlan:
    """e_1..e_N, then e_1 + e_j and e_1 - i e_j for j = 2..N."""
    vecs = [_unit(n, j) for j in range(n)]
    e1 = vecs[0]
    vecs += [e1 + vecs[j] for j in range(1, n)]
    vecs += [e1 - 1j * vecs[j] for j in range(1, n)]
    return IlluminationPlan(vecs, PlanKind.GENERAL)


def symmetric_plan(n) -> IlluminationPlan:
    """Same vectors as the general plan, in sweep order.

    e_1, then for each j = 2..N the triplet e_j, e_1 + e_j, e_1 - i e_j.
    """
    e1 = _unit(n, 0)
    vecs = [e1]
    for j in range(1, n):
        ej = _unit(n, j)
        vecs += [ej, e1 + ej, e1 - 1j * ej]
    return IlluminationPlan(vecs, PlanKind.SYMMETRIC)


def paraxial_six_plan(c) -> IlluminationPlan:
    """Two triplets at the array edges, pre-compensated by the geometric factors."""
    c = np.asarray(c)
    n = len(c)
    if n < 2:
        raise PreconditionError("six-illumination protocol needs N >= 2")
    e = lambda i: _unit(n, i)  # noqa: E731
    vecs = [
        e(0),
        (e(0) + e(1)) / c,
        (e(0) + 1j * e(1)) / c,
        e(n - 1),
        (e(n - 1) + e(n - 2)) / c,
        (e(n - 1) + 1j * e(n - 2)) / c,
    ]
    return IlluminationPlan(vecs, PlanKind.PARAXIAL_SIX)


# --- polarization ------------------------------------------------------------


def polarization_product(i_a, i_b, i_sum, i_mix):
    """conj(a) * b from |a|^2, |b|^2, |a + b|^2 and |a - i b|^2.

    Works element-wise on arrays.
    """
    re = (np.asarray(i_sum) - i_a - i_b) / 2
    im = (np.asarray(i_mix) - i_a - i_b) / 2
    return re + 1j * im


def _clamp(z, i_a, i_b):
    """Shrink products whose modulus exceeds sqrt(|a|^2 |b|^2) (noise only)."""
    bound = np.sqrt(np.maximum(i_a, 0) * np.maximum(i_b, 0))
    mag = np.abs(z)
    scale = np.where(mag > bound, bound / np.where(mag > 0, mag, 1), 1.0)
    return z * scale


# --- general and symmetric protocols -------------------------------------------


def _relative_reference(amp, ref):
    """|p_k,ref| / max_j |p_kj| per row; rows of zeros count as fine."""
    row_max = amp.max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(row_max > 0, amp[:, ref] / np.where(row_max > 0, row_max, 1), 1.0)
    return rel


def _phases_against(amp2, col, sums, mixes):
    """Row-gauged phases arg p_kj - arg p_k,col from the polarization identity."""
    z = polarization_product(amp2[:, [col]], amp2, sums, mixes)
    z = _clamp(z, amp2[:, [col]], amp2)
    phase = np.angle(z)
    phase[:, col] = 0.0
    return phase


def _row_gauged(oracle, n, kind, tau_ref, fallback):
    """Q with Q_kj = p_kj exp(-i arg p_k1): every row carries its own gauge."""
    plan = general_plan(n) if kind is PlanKind.GENERAL else symmetric_plan(n)
    amp2 = np.empty((n, n))
    sums = np.empty((n, n))
    mixes = np.empty((n, n))
    if kind is PlanKind.GENERAL:
        for j in range(n):
            amp2[:, j] = oracle(plan.vectors[j]).intensities
        for j in range(1, n):
            sums[:, j] = oracle(plan.vectors[n + j - 1]).intensities
        for j in range(1, n):
            mixes[:, j] = oracle(plan.vectors[2 * n + j - 2]).intensities
    else:
        amp2[:, 0] = oracle(plan.vectors[0]).intensities
        for j in range(1, n):
            base = 3 * j - 2
            amp2[:, j] = oracle(plan.vectors[base]).intensities
            sums[:, j] = oracle(plan.vectors[base + 1]).intensities
            mixes[:, j] = oracle(plan.vectors[base + 2]).intensities
    sums[:, 0] = 4 * amp2[:, 0]
    mixes[:, 0] = 2 * amp2[:, 0]

    amp = np.sqrt(amp2)
    phase = _phases_against(amp2, 0, sums, mixes) if n > 1 else np.zeros((n, n))
    rel = _relative_reference(amp, 0)
    report = ConditionReport(float(rel.min()) if n else np.inf)
    bad = np.flatnonzero(rel < tau_ref)
    report.flagged = bad.tolist()
    if fallback and len(bad):
        # re-reference broken rows on their strongest column (costs 2N-2 shots each)
        for col in np.unique(amp[bad].argmax(axis=1)):
            rows = bad[amp[bad].argmax(axis=1) == col]
            s2 = np.empty((n, n))
            m2 = np.empty((n, n))
            ec = _unit(n, col)
            for j in range(n):
                if j == col:
                    continue
                ej = _unit(n, j)
                s2[:, j] = oracle(ec + ej).intensities
                m2[:, j] = oracle(ec - 1j * ej).intensities
                report.extra_illuminations += 2
            s2[:, col] = 4 * amp2[:, col]
            m2[:, col] = 2 * amp2[:, col]
            phase[rows] = _phases_against(amp2, col, s2, m2)[rows]
    return amp * np.exp(1j * phase), report


def recover_time_reversal(
    oracle: IntensityOracle, n: int, tau_ref=TAU_REF, fallback=False
) -> RecoveredOperator:
    """Time reversal matrix M = P* P from 3N - 2 intensity measurements.

    Only phase differences within each receiver row are needed, and those
    cancel the unknown per-row phase in sum_k conj(p_ki) p_kj.
    """
    q, report = _row_gauged(oracle, n, PlanKind.GENERAL, tau_ref, fallback)
    m = q.conj().T @ q
    m = (m + m.conj().T) / 2
    return RecoveredOperator(m, OperatorKind.TIME_REVERSAL, "gauge-free (P* P)", report)


def recover_response_symmetric(
    oracle: IntensityOracle, n: int, tau_ref=TAU_REF, fallback=False
) -> RecoveredOperator:
    """Symmetric response matrix up to a global phase from 3N - 2 measurements.

    The gauge is p_11 real nonnegative. Row k's phase comes from the first
    row through p_k1 = p_1k; when that entry is negligible, the strongest
    already-known row r is used via p_kr = p_rk instead.
    """
    q, report = _row_gauged(oracle, n, PlanKind.SYMMETRIC, tau_ref, fallback)
    amp = np.abs(q)
    known = np.zeros(n, bool)
    p = np.empty_like(q)
    p[0] = q[0]
    known[0] = True
    for k in range(1, n):
        refs = np.flatnonzero(known)
        r = refs[np.argmax(amp[k, refs])] if fallback else 0
        if amp[k, r] < tau_ref * max(amp[k].max(), 1e-300) and k not in report.flagged:
            report.flagged.append(k)
        ratio = p[r, k] * np.conj(q[k, r])
        u = ratio / abs(ratio) if ratio != 0 else 1.0
        p[k] = u * q[k]
        known[k] = True
    p[0, 0] = abs(p[0, 0])
    return RecoveredOperator(p, OperatorKind.RESPONSE, "p_11 real nonnegative", report)


# --- paraxial six-illumination protocol ------------------------------------------


def recover_paraxial_six(
    oracle: IntensityOracle, geom: ArrayGeometry, range_, tau_ref=TAU_REF
):
    """Hankel-structured response from six illuminations.

    Returns ``(RecoveredOperator, ResponseMatrix)``: the recovered Hankel
    matrix H with xi_0 real positive, and D H D with the geometric factors D.
    Raises PhaseChainError when some |xi_i| is below ``tau_ref`` times the
    largest one.
    """
    if not geom.is_linear:
        raise PreconditionError("six-illumination protocol needs a uniform linear array")
    c = geometric_factors(geom, range_).c
    n = geom.n
    plan = paraxial_six_plan(c)
    beta = [oracle(f).intensities for f in plan.vectors]
    c2 = np.abs(c) ** 2

    # processed intensities: |xi|^2 and the two polarization partners
    top_abs2 = beta[0] / (c2 * c2[0])
    top_sum = beta[1] / c2
    top_mix = beta[2] / c2
    bot_abs2 = beta[3] / (c2 * c2[-1])
    bot_sum = beta[4] / c2
    bot_mix = beta[5] / c2

    mag2 = np.concatenate([top_abs2, bot_abs2[1:]])
    mag = np.sqrt(mag2)
    rel = mag / mag.max() if mag.max() > 0 else np.zeros_like(mag)
    report = ConditionReport(float(rel.min()))
    weak = np.flatnonzero(rel < tau_ref)
    if len(weak):
        report.flagged = weak.tolist()
        raise PhaseChainError(
            f"|xi_{weak[0]}| is negligible; the phase chain breaks there", index=int(weak[0])
        )

    # w_r = conj(xi_{r+1}) xi_r for r = 0..N-2 (top edge)
    w = polarization_product(mag2[1:n], mag2[: n - 1], top_sum[: n - 1], top_mix[: n - 1])
    # v_r = conj(xi_{r+N-2}) xi_{r+N-1} for r = 1..N-1 (bottom edge)
    a2 = mag2[n - 1 : 2 * n - 2]
    b2 = mag2[n:]
    v = polarization_product(a2, b2, bot_sum[1:], bot_mix[1:])
    steps = np.concatenate([-np.angle(w), np.angle(v)])
    phase = np.concatenate([[0.0], np.cumsum(steps)])
    xi = mag * np.exp(1j * phase)
    xi[0] = mag[0]

    h = hankel_matrix(xi)
    rec = RecoveredOperator(h, OperatorKind.HANKEL, "xi_0 real positive", report)
    p = ResponseMatrix(c[:, None] * h * c[None, :], "recovered-paraxial", True)
    return rec, p
