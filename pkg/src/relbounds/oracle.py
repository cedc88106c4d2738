"""Brute-force ground truth for explicit codebooks.

Exact and Monte Carlo average error probability under the additive-
metric decoder with uniform tie breaking, finite-blocklength exponent
anchors, and constant-composition codebook sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .probability import ChannelKernel, DecodingMetric, ProbVec, ValidationError

TIE_TOL = 1e-12  # two accumulated scores within this are tied, by definition
DEFAULT_ENUM_CAP = 2 ** 24
_BLOCK = 1 << 14


@dataclass(frozen=True)
class Codebook:
    """Explicit list of length-n input sequences."""

    n: int
    words: np.ndarray  # (M, n) integer symbols
    composition: ProbVec | None = None

    def __post_init__(self):
        w = np.asarray(self.words, dtype=np.int64)
        if w.ndim != 2 or w.shape[1] != self.n or w.shape[0] == 0:
            raise ValidationError("Codebook: words must be a nonempty (M, n) array")
        if self.composition is not None:
            counts = self.n * self.composition.weights
            for i, word in enumerate(w):
                emp = np.bincount(word, minlength=self.composition.size).astype(float)
                if not np.array_equal(emp, np.round(counts)):
                    raise ValidationError(f"Codebook: word {i} violates the composition")
        w.flags.writeable = False
        object.__setattr__(self, "words", w)

    @property
    def size(self) -> int:
        return self.words.shape[0]

    @property
    def rate(self) -> float:
        """(log M) / n in nats."""
        return math.log(self.size) / self.n


@dataclass(frozen=True)
class PeResult:
    pe: float
    exponent: float
    method: str
    n: int
    trials: int | None = None
    std_error: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.pe <= 1.0:
            raise ValidationError("PeResult: pe outside [0,1]")
        expect = math.inf if self.pe == 0.0 else -math.log(self.pe) / self.n
        if math.isfinite(expect) and abs(expect - self.exponent) > 1e-12:
            raise ValidationError("PeResult: exponent inconsistent with pe")


def _scores_for_outputs(cb: Codebook, q: DecodingMetric, ys: np.ndarray) -> np.ndarray:
    """Accumulated decoder scores, shape (M, batch).

    Per-symbol scores are sorted before accumulation so that ties do not
    depend on symbol order; the running sum uses a sequential cumsum.
    """
    per_symbol = q.scores[cb.words[:, None, :], ys[None, :, :]]  # (M, batch, n)
    ordered = np.sort(per_symbol, axis=2)
    return np.cumsum(ordered, axis=2)[:, :, -1]


def _decode_errors(cb: Codebook, q: DecodingMetric, ys: np.ndarray,
                   sent: np.ndarray) -> np.ndarray:
    """Conditional error probability per output, tie rule included."""
    scores = _scores_for_outputs(cb, q, ys)
    best = scores.max(axis=0)
    is_arg = scores >= best[None, :] - TIE_TOL  # -inf columns tie everybody
    n_arg = is_arg.sum(axis=0)
    sent_in = is_arg[sent, np.arange(ys.shape[0])]
    return 1.0 - sent_in / n_arg


def exact_pe(cb: Codebook, W: ChannelKernel, q: DecodingMetric,
             enumeration_cap: int = DEFAULT_ENUM_CAP) -> PeResult:
    """Exact average error probability by full output enumeration."""
    if q.shape != W.rows.shape:
        raise ValidationError("exact_pe: metric/channel shape mismatch")
    ny = W.ny
    total = ny ** cb.n
    if total > enumeration_cap:
        raise ValidationError(f"exact_pe: |Y|^n = {total} exceeds the cap {enumeration_cap}")
    M = cb.size
    pe = 0.0
    for lo in range(0, total, _BLOCK):
        idx = np.arange(lo, min(lo + _BLOCK, total), dtype=np.int64)
        ys = np.empty((idx.size, cb.n), dtype=np.int64)
        rem = idx.copy()
        for pos in range(cb.n - 1, -1, -1):
            ys[:, pos] = rem % ny
            rem //= ny
        # W^n(y | x_m) for every m
        probs = W.rows[cb.words[:, None, :], ys[None, :, :]].prod(axis=2)  # (M, batch)
        scores = _scores_for_outputs(cb, q, ys)
        best = scores.max(axis=0)
        is_arg = scores >= best[None, :] - TIE_TOL  # -inf columns tie everybody
        n_arg = is_arg.sum(axis=0)
        err = 1.0 - is_arg / n_arg[None, :]
        pe += float(np.sum(probs * err)) / M
    pe = min(max(pe, 0.0), 1.0)
    exponent = math.inf if pe == 0.0 else -math.log(pe) / cb.n
    return PeResult(pe=pe, exponent=exponent, method="exact", n=cb.n)


def monte_carlo_pe(cb: Codebook, W: ChannelKernel, q: DecodingMetric,
                   trials: int, seed: int) -> PeResult:
    """Unbiased Monte Carlo estimate of exact_pe.

    The tie rule is applied in expectation (the conditional error given
    the draw), which only lowers the variance. Deterministic per seed.
    """
    if trials < 1:
        raise ValidationError("monte_carlo_pe: trials must be >= 1")
    rng = np.random.default_rng(seed)
    M = cb.size
    cum = np.cumsum(W.rows, axis=1)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        batch = min(_BLOCK, trials - done)
        sent = rng.integers(0, M, size=batch)
        u = rng.random((batch, cb.n))
        thresholds = cum[cb.words[sent]]  # (batch, n, ny)
        ys = (u[:, :, None] > thresholds).sum(axis=2).astype(np.int64)
        errs = _decode_errors(cb, q, ys, sent)
        total += float(errs.sum())
        total_sq += float((errs ** 2).sum())
        done += batch
    pe = total / trials
    var = max(total_sq / trials - pe ** 2, 0.0)
    std_error = math.sqrt(var / trials)
    pe = min(max(pe, 0.0), 1.0)
    exponent = math.inf if pe == 0.0 else -math.log(pe) / cb.n
    return PeResult(pe=pe, exponent=exponent, method="monte_carlo", n=cb.n,
                    trials=trials, std_error=std_error)


def finite_exponent(cb: Codebook, W: ChannelKernel, q: DecodingMetric,
                    enumeration_cap: int = DEFAULT_ENUM_CAP) -> float:
    """-(1/n) log pe for this codebook; +inf when pe = 0."""
    return exact_pe(cb, W, q, enumeration_cap).exponent


def type_class_size(counts: np.ndarray) -> int:
    n = int(counts.sum())
    out = math.factorial(n)
    for c in counts:
        out //= math.factorial(int(c))
    return out


def random_cc_code(P_n: ProbVec, n: int, M: int, seed: int) -> Codebook:
    """M distinct words drawn uniformly without replacement from the
    type class of P_n. Requires n * P_n to be integral."""
    counts = n * P_n.weights
    rounded = np.round(counts)
    if np.max(np.abs(counts - rounded)) > 1e-9:
        raise ValidationError("random_cc_code: n * P is not integral")
    counts = rounded.astype(int)
    size = type_class_size(counts)
    if M > size:
        raise ValidationError(f"random_cc_code: M = {M} exceeds the type class size {size}")
    base = np.repeat(np.arange(P_n.size), counts)
    rng = np.random.default_rng(seed)
    seen: dict = {}
    words = []
    while len(words) < M:
        w = tuple(rng.permutation(base))
        if w not in seen:
            seen[w] = True
            words.append(w)
    return Codebook(n=n, words=np.array(words, dtype=np.int64), composition=P_n)
