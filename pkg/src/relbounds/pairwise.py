"""Pairwise divergence machinery shared by the classic and genie bounds.

The central object is the constrained divergence

    Omega(w, Wc, q) = min over rows V(.|x,xt,z) of
        sum_cells w(x,xt,z) KL(V(.|x,xt,z) || Wc(.|x,z))
    subject to sum_cells w(x,xt,z) E_V[q(xt,Y) - q(x,Y)] >= 0,

whose Lagrangian dual in the tilt parameter s is the objective that
appears inside every s-supremum of this package. Both routes are
implemented so they can certify each other: the dual value is a lower
bound on the minimum (weak duality), while the primal route evaluates
the objective at feasible tilted rows, an upper bound.
"""

from __future__ import annotations

import math

import numpy as np

from .optimize import OptimizerConfig, maximize_concave_1d
from .probability import NEG_INF


def log_tilted_sum(w_row: np.ndarray, dq_row: np.ndarray, s: float) -> float:
    """log sum_y w(y) exp(s * dq(y)) with extended-real conventions.

    At s = 0 every exponential is 1 even where dq = -inf; for s > 0 a
    dq of -inf kills its term and a dq of +inf dominates everything.
    """
    if s == 0.0:
        return 0.0 if w_row.sum() > 0 else NEG_INF
    active = w_row > 0
    if not np.any(active):
        return NEG_INF
    d = dq_row[active]
    w = w_row[active]
    if np.any(np.isposinf(d)):
        return math.inf
    finite = ~np.isneginf(d)
    if not np.any(finite):
        return NEG_INF
    vals = np.log(w[finite]) + s * d[finite]
    m = float(np.max(vals))
    return m + math.log(np.sum(np.exp(vals - m)))


def tilted_row(w_row: np.ndarray, dq_row: np.ndarray, s: float) -> np.ndarray:
    """Row proportional to w(y) exp(s * dq(y)), normalized."""
    if s == 0.0:
        total = w_row.sum()
        return w_row / total
    out = np.zeros_like(w_row)
    active = (w_row > 0) & ~np.isneginf(dq_row)
    if not np.any(active):
        return out
    vals = np.log(w_row[active]) + s * dq_row[active]
    vals -= vals.max()
    e = np.exp(vals)
    out[active] = e / e.sum()
    return out


class PairwiseProblem:
    """Cells (x, xt, z) with weights w, channel rows Wc[x, z] and metric q.

    The dual objective is evaluated vectorized over all positive-weight
    cells: one stacked log-sum-exp per tilt value.
    """

    def __init__(self, weights: np.ndarray, cond_rows: np.ndarray, scores: np.ndarray):
        w = np.asarray(weights, dtype=float)
        Wc = np.asarray(cond_rows, dtype=float)
        q = np.asarray(scores, dtype=float)
        if w.ndim != 3:
            raise ValueError("weights must be indexed by (x, xt, z)")
        nx, nxt, nz = w.shape
        if nxt != nx or Wc.shape[:2] != (nx, nz) or q.shape[0] != nx or q.shape[1] != Wc.shape[2]:
            raise ValueError("pairwise problem shapes disagree")
        self.w = w
        self.Wc = Wc
        self.q = q
        self.cells = [
            (x, xt, z)
            for x in range(nx)
            for xt in range(nx)
            for z in range(nz)
            if w[x, xt, z] > 0
        ]
        ny = Wc.shape[2]
        m = len(self.cells)
        self._wts = np.empty(m)
        self._logw = np.full((m, ny), NEG_INF)
        self._dmat = np.zeros((m, ny))
        self._pos_inf = np.zeros(m, dtype=bool)
        self._dead = np.zeros(m, dtype=bool)
        self._logmass0 = np.zeros(m)
        for k, (x, xt, z) in enumerate(self.cells):
            self._wts[k] = w[x, xt, z]
            row = Wc[x, z]
            d = self.dq(x, xt)
            active = (row > 0) & ~np.isneginf(d)
            self._pos_inf[k] = bool(np.any((row > 0) & np.isposinf(d)))
            self._dead[k] = not np.any(active) and not self._pos_inf[k]
            self._logw[k, active] = np.log(row[active])
            self._dmat[k, active] = d[active]
            self._logmass0[k] = math.log(row[row > 0].sum()) if np.any(row > 0) else NEG_INF

    def dq(self, x: int, xt: int) -> np.ndarray:
        d = self.q[xt] - self.q[x]
        # (-inf) - (-inf) only matters off the channel support; resolve to -inf
        return np.where(np.isnan(d), NEG_INF, d)

    def dual_objective(self, s: float) -> float:
        """-sum_cells w log sum_y Wc e^{s dq}; concave in s."""
        if s == 0.0:
            # every exponential equals 1 at s = 0, -inf drops included
            return float(-(self._wts @ self._logmass0))
        if np.any(self._pos_inf):
            return NEG_INF
        if np.any(self._dead):
            return math.inf
        mat = self._logw + s * self._dmat
        mx = mat.max(axis=1)
        logS = mx + np.log(np.exp(mat - mx[:, None]).sum(axis=1))
        return float(-(self._wts @ logS))

    def dual(self, cfg: OptimizerConfig) -> tuple[float, float, bool]:
        """sup over s >= 0 of the dual objective: (value, s_star, hit_cap)."""
        res = maximize_concave_1d(self.dual_objective, 0.0, cfg.s_max_cap, cfg.tol_1d)
        if res.hit_cap and res.value - self.dual_objective(0.0) <= 1e-12:
            # flat to rounding noise: the sup is attained everywhere
            return res.value, 0.0, False
        if res.hit_cap:
            res = maximize_concave_1d(self.dual_objective, 0.0, 2.0 * cfg.s_max_cap, cfg.tol_1d)
        return res.value, res.argmax, res.hit_cap

    def _constraint_and_kl(self, s: float) -> tuple[float, float]:
        """(metric margin, primal objective) at the s-tilted feasible rows."""
        margin = 0.0
        kl = 0.0
        minus_inf = False
        for (x, xt, z) in self.cells:
            row = tilted_row(self.Wc[x, z], self.dq(x, xt), s)
            mask = row > 0
            kl += self.w[x, xt, z] * float(np.sum(row[mask] * np.log(row[mask] / self.Wc[x, z][mask])))
            d = self.dq(x, xt)[mask]
            if np.any(np.isneginf(d)):
                minus_inf = True
                continue
            margin += self.w[x, xt, z] * float(np.sum(row[mask] * d))
        return (NEG_INF if minus_inf else margin), kl

    def _first_feasible_on_grid(self, lo: float, hi: float, step: float) -> float:
        """Smallest grid point lo + k*step in (lo, hi] with margin >= 0.

        The margin is nondecreasing in s, so bisection over grid indices
        finds the same point a left-to-right march would.
        """
        n = int(math.ceil((hi - lo) / step))
        a, b = 1, n
        while a < b:
            mid = (a + b) // 2
            m, _ = self._constraint_and_kl(lo + mid * step)
            if m >= 0.0:
                b = mid
            else:
                a = mid + 1
        return lo + a * step

    def primal(self, step: float = 1e-3, s_hi: float = 64.0) -> float:
        """Feasible-point evaluation of the constrained minimum.

        The minimizer lies on the tilted-row family and the metric margin
        is nondecreasing in s, so the first feasible point of a fine grid
        (one refinement pass at step/1000 inside the bracketing cell)
        evaluates the minimum from above.
        """
        m0, _ = self._constraint_and_kl(0.0)
        if m0 >= 0.0:
            return 0.0
        hi = s_hi
        mh, _ = self._constraint_and_kl(hi)
        if mh < 0.0:
            raise ValueError("pairwise primal: metric constraint unattainable on the tilt family")
        s1 = self._first_feasible_on_grid(0.0, hi, step)
        s2 = self._first_feasible_on_grid(s1 - step, s1, step / 1000.0)
        _, kl = self._constraint_and_kl(s2)
        return kl

    def primal_gap(self, cfg: OptimizerConfig, step: float = 1e-3) -> float:
        """|primal - dual|; small on instances where strong duality holds."""
        dual, _, _ = self.dual(cfg)
        prim = self.primal(step=step)
        return abs(prim - dual)


def product_coupling_weights(px: np.ndarray) -> np.ndarray:
    """Independent pair weights w(x, xt) = P(x) P(xt), with a trivial z axis."""
    return np.multiply.outer(px, px)[:, :, None]
