"""Finite-alphabet probability primitives, information measures, and
channel/metric predicates.

All logarithms are natural; every quantity in this package is in nats
unless a caller converts at the presentation layer. Scores of minus
infinity are represented by the IEEE float ``-inf`` and all operations
honor extended-real semantics exactly (never a large negative float).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-12
NEG_INF = float("-inf")


class ValidationError(ValueError):
    """Raised when a probability object violates its invariants."""


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: entries must be finite")
    return arr


def _check_mass(arr: np.ndarray, name: str) -> None:
    if np.any(arr < 0):
        raise ValidationError(f"{name}: negative entry {arr.min()!r}")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_TOL:
        # Renormalization is refused on purpose: a bad row sum is an
        # ingestion bug, not something to paper over.
        raise ValidationError(f"{name}: mass {total!r} differs from 1 by more than {PROB_TOL}")


@dataclass(frozen=True)
class ProbVec:
    """Probability vector over a finite alphabet."""

    weights: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.weights, "ProbVec")
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("ProbVec: weights must be a nonempty 1-D array")
        _check_mass(arr, "ProbVec")
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)

    @property
    def size(self) -> int:
        return self.weights.size

    @staticmethod
    def uniform(n: int) -> "ProbVec":
        return ProbVec(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class JointDist:
    """Joint distribution over a product of 2 or 3 finite alphabets."""

    weights: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.weights, "JointDist")
        if arr.ndim not in (2, 3):
            raise ValidationError("JointDist: need 2 or 3 factors")
        _check_mass(arr, "JointDist")
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)

    @property
    def shape(self) -> tuple:
        return self.weights.shape

    def marginal(self, axis: int) -> ProbVec:
        axes = tuple(i for i in range(self.weights.ndim) if i != axis)
        return ProbVec(self.weights.sum(axis=axes))


@dataclass(frozen=True)
class ChannelKernel:
    """Conditional probability matrix W(y|x): one distribution over Y per x."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.rows, "ChannelKernel")
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValidationError("ChannelKernel: rows must form a nonempty 2-D matrix")
        if np.any(arr < 0):
            raise ValidationError("ChannelKernel: negative entry")
        sums = arr.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise ValidationError(f"ChannelKernel: row {bad[0]} sums to {sums[bad[0]]!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "rows", arr)

    @property
    def nx(self) -> int:
        return self.rows.shape[0]

    @property
    def ny(self) -> int:
        return self.rows.shape[1]

    @staticmethod
    def bsc(p: float) -> "ChannelKernel":
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"bsc: crossover {p!r} outside [0,1]")
        return ChannelKernel(np.array([[1.0 - p, p], [p, 1.0 - p]]))


@dataclass(frozen=True)
class DecodingMetric:
    """Additive decoding score q(x,y) in R union {-inf}."""

    scores: np.ndarray
    is_ml: bool = False

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        if arr.ndim != 2:
            raise ValidationError("DecodingMetric: scores must be 2-D")
        if np.any(np.isnan(arr)) or np.any(np.isposinf(arr)):
            raise ValidationError("DecodingMetric: scores must be real or -inf")
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    @property
    def shape(self) -> tuple:
        return self.scores.shape


@dataclass(frozen=True)
class BroadcastKernel:
    """Two-output channel W(y,z|x), stored as weights[x, y, z].

    Marginals are derived on demand. Where W_{Z|X}(z|x) = 0 the
    conditional row W_{Y|XZ}(.|x,z) is undefined and flagged as such.
    """

    weights: np.ndarray
    base: ChannelKernel | None = field(default=None, compare=False)

    def __post_init__(self):
        arr = _as_float_array(self.weights, "BroadcastKernel")
        if arr.ndim != 3:
            raise ValidationError("BroadcastKernel: weights must be indexed by (x, y, z)")
        if np.any(arr < 0):
            raise ValidationError("BroadcastKernel: negative entry")
        sums = arr.sum(axis=(1, 2))
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise ValidationError(f"BroadcastKernel: input {bad[0]} has mass {sums[bad[0]]!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)
        if self.base is not None:
            marg = arr.sum(axis=2)
            if np.max(np.abs(marg - self.base.rows)) > 1e-10:
                raise ValidationError("BroadcastKernel: marginal over z does not recover the base channel")

    @property
    def nx(self) -> int:
        return self.weights.shape[0]

    @property
    def ny(self) -> int:
        return self.weights.shape[1]

    @property
    def nz(self) -> int:
        return self.weights.shape[2]

    def y_marginal(self) -> ChannelKernel:
        return ChannelKernel(self.weights.sum(axis=2))

    def z_given_x(self) -> np.ndarray:
        """W_{Z|X} as an (nx, nz) array."""
        return self.weights.sum(axis=1)

    def y_given_xz(self) -> tuple[np.ndarray, np.ndarray]:
        """(W_{Y|XZ} as (nx, nz, ny), defined mask as (nx, nz)).

        Rows with W_{Z|X}(z|x) = 0 are zero-filled and flagged undefined.
        """
        wzx = self.z_given_x()
        defined = wzx > 0.0
        cond = np.zeros((self.nx, self.nz, self.ny))
        for x in range(self.nx):
            for z in range(self.nz):
                if defined[x, z]:
                    cond[x, z, :] = self.weights[x, :, z] / wzx[x, z]
        return cond, defined


def kl_divergence(p: ProbVec, r: ProbVec) -> float:
    """D(p || r) in nats, with 0 log(0/.) = 0 and +inf on support failure."""
    if p.size != r.size:
        raise ValidationError("kl_divergence: alphabet mismatch")
    pw, rw = p.weights, r.weights
    mask = pw > 0
    if np.any(rw[mask] == 0):
        return math.inf
    return float(np.sum(pw[mask] * np.log(pw[mask] / rw[mask])))


def kl_divergence_raw(pw: np.ndarray, rw: np.ndarray) -> float:
    """KL between two nonnegative 1-D arrays of equal mass (unchecked)."""
    mask = pw > 0
    if np.any(rw[mask] == 0):
        return math.inf
    return float(np.sum(pw[mask] * np.log(pw[mask] / rw[mask])))


def conditional_kl(rows: np.ndarray, wk: ChannelKernel, px: ProbVec) -> float:
    """D(P_{Y|X} || W | P) = sum_x P(x) D(rows[x] || W[x]).

    Zero-mass inputs contribute nothing even when their row divergence
    is infinite.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.shape != wk.rows.shape or px.size != wk.nx:
        raise ValidationError("conditional_kl: shape mismatch")
    total = 0.0
    for x in range(wk.nx):
        w = px.weights[x]
        if w == 0:
            continue
        d = kl_divergence_raw(rows[x], wk.rows[x])
        if math.isinf(d):
            return math.inf
        total += w * d
    return total


def mutual_information(j: JointDist) -> float:
    """I(X;Z) of a two-factor joint, in nats."""
    if j.weights.ndim != 2:
        raise ValidationError("mutual_information: need a two-factor joint")
    return mutual_information_raw(j.weights)


def mutual_information_raw(w: np.ndarray) -> float:
    px = w.sum(axis=1)
    pz = w.sum(axis=0)
    prod = np.outer(px, pz)
    mask = w > 0
    return float(np.sum(w[mask] * np.log(w[mask] / prod[mask])))


def binary_entropy(x: float) -> float:
    """h2(x) in nats; endpoints map to 0."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"binary_entropy: {x!r} outside [0,1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * math.log(x) - (1.0 - x) * math.log(1.0 - x))


def ml_metric(w: ChannelKernel) -> DecodingMetric:
    """Maximum-likelihood metric log W(y|x), -inf exactly at W zeros."""
    with np.errstate(divide="ignore"):
        scores = np.where(w.rows > 0, np.log(np.where(w.rows > 0, w.rows, 1.0)), NEG_INF)
    return DecodingMetric(scores=scores, is_ml=True)


def metric_supports_channel(w: ChannelKernel, q: DecodingMetric) -> bool:
    """True iff W(y|x) > 0 implies q(x,y) > -inf."""
    if q.shape != w.rows.shape:
        raise ValidationError("metric_supports_channel: shape mismatch")
    return not np.any((w.rows > 0) & np.isneginf(q.scores))


def _pair_gap(w: ChannelKernel, q: DecodingMetric, x: int, xt: int) -> float:
    """max over {y : W(y|xt) > 0} of q(x,y) - q(xt,y), extended-real."""
    support = w.rows[xt] > 0
    if not np.any(support):
        return NEG_INF
    diffs = q.scores[x, support] - q.scores[xt, support]
    # q(xt, y) is finite on its own support whenever the metric supports
    # the channel, so the difference is real or -inf (never nan).
    diffs = np.where(np.isnan(diffs), NEG_INF, diffs)
    return float(np.max(diffs))


def zero_error_mismatch_is_zero(w: ChannelKernel, q: DecodingMetric) -> bool:
    """True iff C_{0,q}(W) = 0 for this channel/metric pair.

    The test is: for every ordered pair (x, xt),
    max_{y: W(y|xt)>0} [q(x,y)-q(xt,y)] + max_{y: W(y|x)>0} [q(xt,y)-q(x,y)] >= 0,
    with -inf dominating sums.
    """
    if q.shape != w.rows.shape:
        raise ValidationError("zero_error_mismatch_is_zero: shape mismatch")
    nx = w.nx
    for x in range(nx):
        for xt in range(x + 1, nx):
            a = _pair_gap(w, q, x, xt)
            b = _pair_gap(w, q, xt, x)
            if math.isinf(a) and a < 0:
                return False
            if math.isinf(b) and b < 0:
                return False
            if a + b < 0:
                return False
    return True


def is_balanced(w: ChannelKernel, q: DecodingMetric) -> bool:
    """Balanced channel/metric pair predicate.

    Requires the zero-error-mismatch capacity to vanish, and for every
    pair (x, xt): whenever the max of q(x,.)-q(xt,.) over the support of
    W(.|xt) coincides with the min of the same differences over the
    support of W(.|x), the differences must be constant over the
    combined finite-score support.
    """
    if not zero_error_mismatch_is_zero(w, q):
        return False
    nx = w.nx
    for x in range(nx):
        for xt in range(nx):
            if x == xt:
                continue
            sup_xt = w.rows[xt] > 0
            sup_x = w.rows[x] > 0
            diffs = q.scores[x] - q.scores[xt]
            diffs = np.where(np.isnan(diffs), NEG_INF, diffs)
            lhs_max = float(np.max(diffs[sup_xt])) if np.any(sup_xt) else NEG_INF
            # min over support of W(.|x); q(x,y) finite there, q(xt,y) may
            # be -inf making the difference +inf
            d2 = q.scores[x] - q.scores[xt]
            d2 = np.where(np.isneginf(q.scores[xt]) & ~np.isneginf(q.scores[x]), math.inf, d2)
            d2 = np.where(np.isnan(d2), NEG_INF, d2)
            lhs_min = float(np.min(d2[sup_x])) if np.any(sup_x) else math.inf
            if lhs_max == lhs_min:
                both_finite = (~np.isneginf(q.scores[x])) & (~np.isneginf(q.scores[xt]))
                combined = (sup_x | sup_xt) & both_finite
                if not np.any(combined):
                    continue
                vals = (q.scores[x] - q.scores[xt])[combined]
                if float(np.max(vals)) != float(np.min(vals)):
                    return False
    return True
