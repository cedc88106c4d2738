"""Classic reliability-function bounds.

Sphere-packing, random-coding, expurgated and Csiszar-Korner exponents,
the zero-rate exponent, the straight-line bound, and the standard BSC
lower envelope. Everything is computed at fixed input composition in
nats; curve-level maximization over the composition is handled where a
bound is defined that way.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .optimize import OptimizerConfig, maximize_concave_1d, maximize_scan_1d
from .pairwise import PairwiseProblem, tilted_row
from .probability import (
    NEG_INF,
    ChannelKernel,
    DecodingMetric,
    ProbVec,
    ValidationError,
    binary_entropy,
    is_balanced,
    kl_divergence_raw,
    metric_supports_channel,
    ml_metric,
    mutual_information_raw,
)

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BoundCurve:
    """Named sequence of (rate, exponent) points plus solver metadata."""

    name: str
    points: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = tuple((float(r), float(e)) for r, e in self.points)
        rates = [r for r, _ in pts]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValidationError(f"BoundCurve {self.name}: rates must be strictly increasing")
        if any(e < 0 for _, e in pts):
            raise ValidationError(f"BoundCurve {self.name}: negative exponent")
        object.__setattr__(self, "points", pts)

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for r, _ in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([e for _, e in self.points])

    def is_nonincreasing(self, tol: float = 1e-9) -> bool:
        v = self.values
        return bool(np.all(v[1:] <= v[:-1] + tol))


@dataclass(frozen=True)
class TangentPoint:
    """Where the line from (0, E0) touches the sphere-packing curve."""

    R_star: float
    slope: float
    E0: float

    def line(self, R: float) -> float:
        return self.E0 + self.slope * R


@dataclass(frozen=True)
class BscLowerBoundParams:
    """Derived constants of the BSC lower envelope."""

    p: float
    R_min: float
    R_crit: float

    @staticmethod
    def for_crossover(p: float, r_crit: float | None = None) -> "BscLowerBoundParams":
        if not 0.0 < p < 0.5:
            raise ValidationError("BscLowerBoundParams: need 0 < p < 1/2")
        q2 = 2.0 * math.sqrt(p * (1.0 - p))
        r_min = LOG2 - binary_entropy(q2 / (1.0 + q2))
        if r_crit is None:
            sp = math.sqrt(p)
            r_crit = LOG2 - binary_entropy(sp / (sp + math.sqrt(1.0 - p)))
        return BscLowerBoundParams(p=p, R_min=r_min, R_crit=r_crit)

    def delta_gv(self, R: float) -> float:
        """Solve log 2 - h2(delta) = R on [0, 1/2] (R in nats)."""
        d = _h2_inverse(LOG2 - R)
        if abs((LOG2 - binary_entropy(d)) - R) > 1e-10:
            raise ValidationError("delta_gv: bisection failed the residual check")
        return d


def _h2_inverse(target: float) -> float:
    """Inverse of the natural-log binary entropy on [0, 1/2]."""
    if target <= 0.0:
        return 0.0
    if target >= LOG2:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _kl2(a: float, b: float) -> float:
    v = 0.0
    if a > 0.0:
        if b == 0.0:
            return math.inf
        v += a * math.log(a / b)
    if a < 1.0:
        if b == 1.0:
            return math.inf
        v += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return v


def _bsc_crossover(w: ChannelKernel) -> float | None:
    """Crossover probability if w is a BSC with p <= 1/2, else None."""
    r = w.rows
    if r.shape != (2, 2):
        return None
    if r[0, 0] == r[1, 1] and r[0, 1] == r[1, 0] and 0.0 < r[0, 1] <= 0.5:
        return float(r[0, 1])
    return None


def _is_uniform(P: ProbVec) -> bool:
    return bool(np.max(np.abs(P.weights - 1.0 / P.size)) <= 1e-12)


def capacity(P: ProbVec, W: ChannelKernel) -> float:
    """I(P x W) in nats."""
    return mutual_information_raw(P.weights[:, None] * W.rows)


def e_sp(R: float, P: ProbVec, W: ChannelKernel, cfg: OptimizerConfig | None = None,
         return_argmin: bool = False):
    """Sphere-packing exponent at fixed composition.

    BSC with a uniform input law uses the exact delta parametrization;
    anything else goes through the Lagrangian dual, a 1-D concave
    maximization whose inner minimum has a closed-form fixed point.
    """
    if R < 0:
        raise ValidationError("e_sp: R must be nonnegative")
    cfg = cfg or OptimizerConfig()
    p = _bsc_crossover(W)
    if p is not None and _is_uniform(P):
        cap = LOG2 - binary_entropy(p)
        if R >= cap:
            return (0.0, W.rows.copy()) if return_argmin else 0.0
        d = _h2_inverse(LOG2 - R)
        val = _kl2(d, p)
        V = np.array([[1.0 - d, d], [d, 1.0 - d]])
        return (val, V) if return_argmin else val
    val, V, hit = _esp_dual(R, P, W, cfg)
    if hit:
        warnings.warn("e_sp: dual multiplier hit its cap; value reported at the cap",
                      RuntimeWarning, stacklevel=2)
    return (val, V) if return_argmin else val


def _esp_dual(R: float, P: ProbVec, W: ChannelKernel, cfg: OptimizerConfig):
    """sup over lam >= 0 of [min_V D(V||W|P) + lam (I(PxV) - R)]."""
    px = P.weights
    rows = W.rows

    def inner(lam: float):
        a = 1.0 / (1.0 + lam)
        b = lam / (1.0 + lam)
        wa = rows ** a
        V = rows.copy()
        for _ in range(500):
            Q = px @ V
            Vn = wa * Q[None, :] ** b
            norms = Vn.sum(axis=1, keepdims=True)
            Vn = Vn / norms
            if np.max(np.abs(Vn - V)) < 1e-15:
                V = Vn
                break
            V = Vn
        D = 0.0
        for x in range(W.nx):
            if px[x] > 0:
                D += px[x] * kl_divergence_raw(V[x], rows[x])
        return D + lam * mutual_information_raw(px[:, None] * V), V

    def g(lam: float) -> float:
        return inner(lam)[0] - lam * R

    res = maximize_concave_1d(g, 0.0, cfg.s_max_cap, cfg.tol_1d)
    _, V = inner(res.argmax)
    return max(res.value, 0.0), V, res.hit_cap


class _JointSearch:
    """Common engine for the V-minimizations behind e_r, e_ex and e_ck.

    Works directly on the joint V[xt, x, y]. With both X-marginals
    pinned to P, the divergence term, I(Xt; X, Y), and I(Xt; X) are all
    convex in V (each is an information quantity of a conditional given
    the fixed Xt law), so coordinate line search over a spanning set of
    marginal-preserving directions converges globally. Directions:
    output shifts within one (xt, x) cell, and rectangle exchanges
    across input pairs at a fixed output.
    """

    def __init__(self, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
                 cfg: OptimizerConfig):
        self.px = P.weights
        self.W = W.rows
        self.q = q.scores
        self.cfg = cfg
        self.nx, self.ny = self.W.shape
        self.hp = float(-(np.sum(self.px[self.px > 0] * np.log(self.px[self.px > 0]))))
        self.dq = np.empty((self.nx, self.nx, self.ny))
        for xt in range(self.nx):
            for x in range(self.nx):
                d = self.q[xt] - self.q[x]
                self.dq[xt, x] = np.where(np.isnan(d), NEG_INF, d)
        self.pw = self.px[:, None] * self.W  # reference joint on (x, y)

    def metric_ok(self, V3: np.ndarray) -> bool:
        mask = V3 > 0
        d = self.dq
        if np.any(mask & np.isneginf(d)):
            # E q(Xt,Y) = -inf; feasible only if E q(X,Y) = -inf as well
            qx = np.broadcast_to(self.q[None, :, :], V3.shape)
            return bool(np.any(mask & np.isneginf(qx)))
        return float(np.sum(V3[mask] * d[mask])) >= -1e-12

    def coupling_info(self, V3: np.ndarray) -> float:
        return mutual_information_raw(V3.sum(axis=2))

    def objective(self, V3: np.ndarray, R: float, clamp: bool) -> float:
        Vxy = V3.sum(axis=0)
        mask = Vxy > 0
        if np.any(mask & (self.pw == 0)):
            return math.inf
        D = float(np.sum(Vxy[mask] * np.log(Vxy[mask] / self.pw[mask])))
        h_xy = -float(np.sum(Vxy[mask] * np.log(Vxy[mask])))
        v = V3[V3 > 0]
        h_all = -float(np.sum(v * np.log(v)))
        pen = (self.hp + h_xy - h_all) - R
        if clamp:
            pen = max(pen, 0.0)
        return D + pen

    def _tilted_joint(self, C: np.ndarray, s: float) -> np.ndarray:
        V3 = np.empty((self.nx, self.nx, self.ny))
        for xt in range(self.nx):
            for x in range(self.nx):
                V3[xt, x] = C[xt, x] * tilted_row(self.W[x], self.dq[xt, x], s)
        return V3

    def starts(self, R: float, constrain_info: bool):
        out = []
        indep = np.multiply.outer(self.px, self.px)
        diag = np.diag(self.px)
        if not constrain_info or mutual_information_raw(diag) <= R + 1e-12:
            V3 = diag[:, :, None] * self.W[None, :, :]
            out.append(V3)
        couplings = [indep]
        if constrain_info and mutual_information_raw(diag) > R:
            # boundary coupling: furthest diag/indep mixture with I <= R
            lo, hi = 0.0, 1.0
            for _ in range(60):
                t = 0.5 * (lo + hi)
                if mutual_information_raw((1 - t) * indep + t * diag) <= R:
                    lo = t
                else:
                    hi = t
            couplings.append((1 - lo) * indep + lo * diag)
        elif not constrain_info:
            couplings.append(0.5 * indep + 0.5 * diag)
        for C in couplings:
            # scan the tilt family for feasible, low-objective entry points
            cands = []
            s = 0.0
            for _ in range(60):
                V3 = self._tilted_joint(C, s)
                if self.metric_ok(V3):
                    cands.append(V3)
                    if len(cands) >= 4:
                        break
                s = 0.25 if s == 0.0 else s * 1.6
            out.extend(cands[:2])
            if len(cands) > 2:
                out.append(cands[-1])
        return out

    def solve(self, R: float, kind: str) -> float:
        """Global minimum of the selected convex program over V.

        Cells with a channel zero or an infinite metric drop are pinned
        to zero mass (they cannot belong to a finite-objective feasible
        optimum), which leaves a smooth problem on the remaining cells;
        the positive-part penalty becomes a slack variable. Solved by
        SLSQP from the tilt-family starts; the reported value is the
        exact objective re-evaluated at the solver's feasible point.
        """
        from scipy.optimize import minimize

        constrain_info = kind in ("ex", "ck")
        clamp = kind in ("r", "ck")
        active = [
            (xt, x, y)
            for xt in range(self.nx)
            for x in range(self.nx)
            for y in range(self.ny)
            if self.W[x, y] > 0 and not np.isneginf(self.dq[xt, x, y])
        ]
        m = len(active)
        idx = tuple(np.array(t) for t in zip(*active))
        dq_a = self.dq[idx]

        def unpack(v):
            V3 = np.zeros((self.nx, self.nx, self.ny))
            V3[idx] = np.maximum(v[:m], 0.0)
            return V3

        def exact_value(V3):
            return self.objective(V3, R, clamp)

        def smooth_obj(v):
            V3 = unpack(v)
            Vxy = V3.sum(axis=0)
            mask = Vxy > 0
            D = float(np.sum(Vxy[mask] * np.log(Vxy[mask] / self.pw[mask])))
            if clamp:
                return D + v[m]
            vv = V3[V3 > 0]
            h_all = -float(np.sum(vv * np.log(vv)))
            h_xy = -float(np.sum(Vxy[mask] * np.log(Vxy[mask])))
            return D + (self.hp + h_xy - h_all) - R

        def info_xy_minus_slack(v):
            V3 = unpack(v)
            Vxy = V3.sum(axis=0)
            mask = Vxy > 0
            vv = V3[V3 > 0]
            h_all = -float(np.sum(vv * np.log(vv)))
            h_xy = -float(np.sum(Vxy[mask] * np.log(Vxy[mask])))
            return R + v[m] - (self.hp + h_xy - h_all)

        cons = []
        for xt in range(self.nx):
            rowmask = (idx[0] == xt).astype(float)
            cons.append({"type": "eq",
                         "fun": (lambda v, rm=rowmask, t=self.px[xt]: float(rm @ v[:m]) - t)})
        for x in range(self.nx - 1):  # the last column equation is redundant
            colmask = (idx[1] == x).astype(float)
            cons.append({"type": "eq",
                         "fun": (lambda v, cm=colmask, t=self.px[x]: float(cm @ v[:m]) - t)})
        cons.append({"type": "ineq", "fun": lambda v: float(dq_a @ v[:m])})
        if constrain_info:
            cons.append({"type": "ineq",
                         "fun": lambda v: R - mutual_information_raw(unpack(v).sum(axis=2))})
        if clamp:
            cons.append({"type": "ineq", "fun": info_xy_minus_slack})

        nvar = m + (1 if clamp else 0)
        bounds = [(0.0, 1.0)] * m + ([(0.0, None)] if clamp else [])
        best = math.inf
        for V0 in self.starts(R, constrain_info):
            v0 = np.empty(nvar)
            v0[:m] = 0.98 * V0[idx] + 0.02 / m
            if clamp:
                v0[m] = max(self.hp + 0.5, 1e-3)
            res = minimize(smooth_obj, v0, method="SLSQP", bounds=bounds,
                           constraints=cons,
                           options={"maxiter": 400, "ftol": 1e-12})
            v = np.asarray(res.x)
            V3 = unpack(v)
            total = V3.sum()
            if not (0.5 < total < 1.5):
                continue
            V3 = V3 / total
            if not self.metric_ok(V3):
                continue
            if np.max(np.abs(V3.sum(axis=(1, 2)) - self.px)) > 1e-6:
                continue
            if np.max(np.abs(V3.sum(axis=(0, 2)) - self.px)) > 1e-6:
                continue
            if constrain_info and self.coupling_info(V3) > R + 1e-6:
                continue
            val = exact_value(V3)
            if val < best:
                best = val
        if not math.isfinite(best):
            raise ValidationError(f"e_{kind}: no feasible solver result")
        return best


def _v_exponent(R: float, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
                cfg: OptimizerConfig, kind: str) -> float:
    if not metric_supports_channel(W, q):
        raise ValidationError("metric does not support the channel")
    return _JointSearch(P, W, q, cfg).solve(R, kind)


def e_r(R: float, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
        cfg: OptimizerConfig | None = None) -> float:
    """Random-coding exponent (fixed composition, metric q)."""
    return _v_exponent(R, P, W, q, cfg or OptimizerConfig(), "r")


def e_ex(R: float, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
         cfg: OptimizerConfig | None = None) -> float:
    """Expurgated exponent (fixed composition, metric q). May be negative."""
    return _v_exponent(R, P, W, q, cfg or OptimizerConfig(), "ex")


def e_ck(R: float, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
         cfg: OptimizerConfig | None = None) -> float:
    """Csiszar-Korner exponent: both the information cap and the clamp."""
    return _v_exponent(R, P, W, q, cfg or OptimizerConfig(), "ck")


def zero_rate_exponent(P: ProbVec, W: ChannelKernel, q: DecodingMetric,
                       cfg: OptimizerConfig | None = None) -> float:
    """Zero-rate exponent at fixed composition, by the s-dual.

    sup over s >= 0 of -sum_{x,xt} P(x)P(xt) log sum_y W(y|x) e^{s dq}.
    """
    cfg = cfg or OptimizerConfig()
    if not is_balanced(W, q):
        warnings.warn("zero_rate_exponent: channel/metric pair is not balanced; "
                      "the value may be infinite or meaningless", RuntimeWarning,
                      stacklevel=2)
    weights = np.multiply.outer(P.weights, P.weights)[:, :, None]
    prob = PairwiseProblem(weights, W.rows[:, None, :], q.scores)
    val, _, hit = prob.dual(cfg)
    if hit:
        warnings.warn("zero_rate_exponent: s hit the cap (unbalanced suspicion)",
                      RuntimeWarning, stacklevel=2)
    return val


def zero_rate_exponent_primal(P: ProbVec, W: ChannelKernel, q: DecodingMetric,
                              step: float = 1e-3) -> float:
    """Primal cross-check of the zero-rate exponent on small alphabets."""
    weights = np.multiply.outer(P.weights, P.weights)[:, :, None]
    return PairwiseProblem(weights, W.rows[:, None, :], q.scores).primal(step=step)


def max_over_input(fn, nx: int, cfg: OptimizerConfig, grid: int = 65):
    """max over probability vectors P of fn(P); (argmax, value).

    Binary alphabets get a scan plus ternary refinement; larger ones a
    seeded pattern search over the simplex.
    """
    if nx == 2:
        def g(t):
            return fn(ProbVec(np.array([t, 1.0 - t])))
        res = maximize_scan_1d(g, 0.0, 1.0, n=grid, refine=70)
        return ProbVec(np.array([res.argmax, 1.0 - res.argmax])), res.value
    from .optimize import _pattern_search_rows  # local import: private helper
    best_v, best_p = -math.inf, None
    starts = [np.full((1, nx), 1.0 / nx)]
    for i in range(cfg.restarts):
        starts.append(cfg.rng(200 + i).dirichlet(np.ones(nx), size=1))
    for s in starts:
        arr, v = _pattern_search_rows(lambda a: fn(ProbVec(a[0])), s, cfg, maximize=True)
        if v > best_v:
            best_v, best_p = v, arr[0]
    return ProbVec(best_p), best_v


def straight_line_bound(W: ChannelKernel, q: DecodingMetric | None, Rgrid,
                        cfg: OptimizerConfig | None = None):
    """Straight-line upper bound: (BoundCurve, TangentPoint).

    Linear from (0, E(0+)) to the tangency with the composition-maximized
    sphere-packing curve, then the sphere-packing curve itself.
    """
    cfg = cfg or OptimizerConfig()
    if q is None:
        q = ml_metric(W)
    Rgrid = np.asarray(sorted(float(r) for r in Rgrid))
    if Rgrid.size == 0 or Rgrid[0] <= 0:
        raise ValidationError("straight_line_bound: rate grid must be positive")
    p = _bsc_crossover(W)
    if p is not None and q.is_ml:
        uni = ProbVec.uniform(2)
        E0 = zero_rate_exponent(uni, W, q, cfg)

        def esp_max(R):
            return e_sp(R, uni, W, cfg)
    else:
        _, E0 = max_over_input(lambda P: zero_rate_exponent(P, W, q, cfg), W.nx, cfg)

        def esp_max(R):
            return max_over_input(lambda P: e_sp(R, P, W, cfg), W.nx, cfg)[1]

    if not math.isfinite(E0):
        raise ValidationError("straight_line_bound: zero-rate exponent is not finite")

    def slope_of(R):
        return (esp_max(R) - E0) / R

    lo, hi = float(Rgrid[0]) * 1e-3, float(Rgrid[-1])
    for _ in range(120):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if slope_of(m1) < slope_of(m2):
            hi = m2
        else:
            lo = m1
    r_star = 0.5 * (lo + hi)
    slope = slope_of(r_star)
    tangent = TangentPoint(R_star=r_star, slope=slope, E0=E0)
    if abs(tangent.line(r_star) - esp_max(r_star)) > 1e-4:
        raise ValidationError("straight_line_bound: tangency not found in the rate hull")
    pts = []
    for R in Rgrid:
        val = tangent.line(R) if R < r_star else esp_max(R)
        pts.append((R, max(val, 0.0)))
    curve = BoundCurve(name="E_sl_sp", points=tuple(pts),
                       meta={"R_star": r_star, "slope": slope, "E0": E0})
    return curve, tangent


def e_lb_bsc(R: float, p: float, cfg: OptimizerConfig | None = None,
             r_crit: float | None = None) -> float:
    """BSC lower envelope: GV/expurgated branch, cutoff line, sphere packing."""
    if not 0.0 < p < 0.5:
        raise ValidationError("e_lb_bsc: need 0 < p < 1/2")
    cap = LOG2 - binary_entropy(p)
    if not 0.0 < R < cap:
        raise ValidationError("e_lb_bsc: R outside (0, capacity)")
    params = BscLowerBoundParams.for_crossover(p, r_crit)
    q2 = 2.0 * math.sqrt(p * (1.0 - p))
    if R <= params.R_min:
        return -params.delta_gv(R) * math.log(q2)
    if R <= params.R_crit:
        return LOG2 - math.log(1.0 + q2) - R
    return e_sp(R, ProbVec.uniform(2), ChannelKernel.bsc(p), cfg)
