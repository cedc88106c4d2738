"""Shared optimization machinery.

Everything here is deterministic given the configuration seed: restarts
draw from per-index seed sequences, moves are scanned in lexicographic
order, and the first improving move wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .probability import ProbVec, ValidationError, mutual_information_raw

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerConfig:
    tol_1d: float = 1e-9
    tol_simplex: float = 1e-6
    grid_points_per_dim: int = 64
    refinement_rounds: int = 3
    restarts: int = 16
    s_max_cap: float = 1e4
    rng_seed: int = 101

    def __post_init__(self):
        if self.tol_1d <= 0 or self.tol_simplex <= 0:
            raise ValidationError("OptimizerConfig: tolerances must be positive")
        if self.restarts < 1:
            raise ValidationError("OptimizerConfig: restarts must be >= 1")
        if self.s_max_cap <= 0:
            raise ValidationError("OptimizerConfig: s_max_cap must be positive")

    def rng(self, index: int) -> np.random.Generator:
        """Deterministic per-index generator; prefix-stable in `index`."""
        return np.random.default_rng(np.random.SeedSequence((self.rng_seed, index)))


@dataclass(frozen=True)
class AuxiliaryDecomposition:
    """Auxiliary kernel P_{U|XZ}: one distribution over U per (x, z) cell."""

    kernel: np.ndarray  # shape (nx, nz, nu)
    nu: int

    def __post_init__(self):
        arr = np.asarray(self.kernel, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != self.nu:
            raise ValidationError("AuxiliaryDecomposition: kernel must be (nx, nz, nu)")
        nx, nz, _ = arr.shape
        if self.nu > nx * nx * nz + 1:
            raise ValidationError("AuxiliaryDecomposition: |U| exceeds the Caratheodory cap")
        for x in range(nx):
            for z in range(nz):
                ProbVec(arr[x, z])  # row validation
        arr.flags.writeable = False
        object.__setattr__(self, "kernel", arr)


class OneDResult(tuple):
    """(argmax, value, hit_cap) triple from 1-D maximization."""

    __slots__ = ()

    def __new__(cls, argmax: float, value: float, hit_cap: bool):
        return super().__new__(cls, (argmax, value, hit_cap))

    @property
    def argmax(self) -> float:
        return self[0]

    @property
    def value(self) -> float:
        return self[1]

    @property
    def hit_cap(self) -> bool:
        return self[2]


def maximize_concave_1d(f, lo: float, cap: float, tol: float = 1e-9) -> OneDResult:
    """Golden-section maximization of a concave f on [lo, cap].

    f may be -inf on a suffix of the interval (still unimodal). NaN is
    an error. Returns the best evaluated point; hit_cap is set when the
    argmax is indistinguishable from the cap.
    """
    if cap < lo:
        raise ValidationError("maximize_concave_1d: empty interval")

    def ev(x: float) -> float:
        v = f(x)
        if isinstance(v, float) and math.isnan(v) or v != v:
            raise ValidationError(f"maximize_concave_1d: f({x!r}) is NaN")
        return float(v)

    a, b = float(lo), float(cap)
    best_x, best_v = a, ev(a)
    vb = ev(b)
    if vb > best_v:
        best_x, best_v = b, vb
    if b - a <= tol:
        return OneDResult(best_x, best_v, True)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = ev(c), ev(d)
    span = b - a
    for _ in range(200):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = ev(d)
        if b - a <= max(1e-13 * span, 1e-14):
            break
    for x, v in ((c, fc), (d, fd)):
        if v > best_v:
            best_x, best_v = x, v
    hit = (cap - best_x) <= max(tol, 1e-9 * span)
    return OneDResult(best_x, best_v, hit)


def maximize_scan_1d(f, lo: float, hi: float, n: int = 1024, refine: int = 60) -> OneDResult:
    """Grid scan plus local ternary refinement.

    For objectives that are continuous but only piecewise concave (sums
    of clipped concave terms); the scan locates the global basin and the
    refinement polishes it.
    """
    xs = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in xs])
    i = int(np.argmax(vals))
    a = xs[max(0, i - 1)]
    b = xs[min(n - 1, i + 1)]
    fa_best = float(vals[i])
    x_best = float(xs[i])
    for _ in range(refine):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if f(m1) < f(m2):
            a = m1
        else:
            b = m2
    xm = 0.5 * (a + b)
    vm = float(f(xm))
    if vm > fa_best:
        x_best, fa_best = xm, vm
    hit = (hi - x_best) <= 2.0 * (hi - lo) / max(n - 1, 1)
    return OneDResult(x_best, fa_best, hit)


def _row_starts(shape: tuple, cfg: OptimizerConfig, seeds, rng_index: int):
    """Deterministic list of starting kernels for a rows-over-last-axis search."""
    k = shape[-1]
    starts = []
    if seeds:
        starts.extend(np.asarray(s, dtype=float) for s in seeds)
    starts.append(np.full(shape, 1.0 / k))
    for j in range(k):
        v = np.zeros(shape)
        v[..., j] = 1.0
        starts.append(v)
    rng = cfg.rng(rng_index)
    for _ in range(max(cfg.restarts - len(starts), 0)):
        starts.append(rng.dirichlet(np.ones(k), size=shape[:-1]))
    return starts


def _pattern_search_rows(objective, start: np.ndarray, cfg: OptimizerConfig,
                         maximize: bool = False, feasible=None):
    """First-improving-move pattern search over a stack of simplex rows.

    Moves transfer mass between coordinate pairs of one row at a time,
    scanned in lexicographic order; on small stacks, simultaneous moves
    in two rows are also tried so the search can slide along an active
    constraint boundary. With `feasible` given, a move that leaves the
    feasible set is pulled back toward the current point by bisection
    before evaluation.
    """
    sign = -1.0 if maximize else 1.0
    cur = np.array(start, dtype=float)
    shape = cur.shape
    k = shape[-1]
    flat = cur.reshape(-1, k)
    nrows = flat.shape[0]

    singles = [(r, i, j) for r in range(nrows) for i in range(k)
               for j in range(k) if i != j]
    pairs = []
    if nrows * k <= 12:
        for a in range(len(singles)):
            for b in range(len(singles)):
                if singles[a][0] < singles[b][0]:
                    pairs.append((singles[a], singles[b]))

    def value(arr):
        v = objective(arr.reshape(shape))
        return sign * v

    def apply(base, move, step):
        r, i, j = move
        amt = min(step, base[r, i])
        if amt <= 0.0:
            return None
        out = base.copy()
        out[r, i] -= amt
        out[r, j] += amt
        return out

    cur_val = value(flat)
    step = 0.25
    while step >= cfg.tol_simplex:
        improved = False
        for move in singles:
            cand = apply(flat, move, step)
            if cand is None:
                continue
            if feasible is not None and not feasible(cand.reshape(shape)):
                cand = _pull_back(flat, cand, shape, feasible)
                if cand is None:
                    continue
            v = value(cand)
            if v < cur_val - 1e-15:
                flat, cur_val, improved = cand, v, True
        for m1, m2 in pairs:
            cand = apply(flat, m1, step)
            if cand is None:
                continue
            cand = apply(cand, m2, step)
            if cand is None:
                continue
            if feasible is not None and not feasible(cand.reshape(shape)):
                cand = _pull_back(flat, cand, shape, feasible)
                if cand is None:
                    continue
            v = value(cand)
            if v < cur_val - 1e-15:
                flat, cur_val, improved = cand, v, True
        if not improved:
            step *= 0.5
    return flat.reshape(shape), sign * cur_val


def _pull_back(cur, cand, shape, feasible, iters: int = 40):
    """Largest feasible convex combination of cur and cand, by bisection."""
    lo_t, hi_t = 0.0, 1.0
    found = None
    for _ in range(iters):
        t = 0.5 * (lo_t + hi_t)
        mix = (1.0 - t) * cur + t * cand
        if feasible(mix.reshape(shape)):
            found = mix
            lo_t = t
        else:
            hi_t = t
    return found


def min_over_conditional_simplex(objective, shape: tuple, cfg: OptimizerConfig,
                                 seeds=None) -> tuple[np.ndarray, float]:
    """Minimize objective over conditional kernels of the given shape.

    The kernel is a stack of probability rows over the last axis. Coarse
    binary-output grids seed the search where cheap; multi-start pattern
    search does the rest.
    """
    k = shape[-1]
    starts = _row_starts(shape, cfg, seeds, rng_index=0)
    nrows = int(np.prod(shape[:-1]))
    if k == 2 and nrows <= 3:
        m = min(cfg.grid_points_per_dim, 64)
        axes = [np.linspace(0.0, 1.0, m)] * nrows
        best_g, best_gv = None, math.inf
        for combo in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, nrows):
            arr = np.stack([1.0 - combo, combo], axis=-1).reshape(shape)
            v = objective(arr)
            if v < best_gv:
                best_gv, best_g = v, arr
        if best_g is not None and math.isfinite(best_gv):
            starts.insert(0, best_g)
    best_arr, best_val = None, math.inf
    for s in starts:
        arr, v = _pattern_search_rows(objective, s, cfg)
        if v < best_val:
            best_val, best_arr = v, arr
    if best_arr is None or not math.isfinite(best_val):
        raise ValidationError("min_over_conditional_simplex: objective infinite on every start")
    return best_arr, best_val


def info_constrained_min(objective, P: ProbVec, R: float, cfg: OptimizerConfig,
                         nz: int = 2, seeds=None) -> tuple[np.ndarray, float]:
    """Minimize objective(P_XZ) over joints with P_X = P and I(X;Z) <= R.

    The search runs over the rows of P_{Z|X}; the independent coupling
    is always feasible, so the feasible set is never empty. objective
    receives the joint (nx, nz) array.
    """
    if R < 0:
        raise ValidationError("info_constrained_min: R must be nonnegative")
    nx = P.size
    px = P.weights

    def joint(rows):
        return px[:, None] * rows

    def feasible(rows):
        return mutual_information_raw(joint(rows)) <= R + 1e-12

    def obj(rows):
        return objective(joint(rows))

    base_seeds = [np.full((nx, nz), 1.0 / nz)]
    if seeds:
        for s in seeds:
            s = np.asarray(s, dtype=float)
            if feasible(s):
                base_seeds.append(s)
            else:
                pulled = _pull_back(base_seeds[0], s, (nx, nz), feasible)
                if pulled is not None:
                    base_seeds.append(pulled)
    rng = cfg.rng(1)
    for _ in range(cfg.restarts):
        cand = rng.dirichlet(np.ones(nz), size=nx)
        if not feasible(cand):
            cand = _pull_back(base_seeds[0], cand, (nx, nz), feasible)
            if cand is None:
                continue
        base_seeds.append(cand)

    best_rows, best_val = None, math.inf
    for s in base_seeds:
        rows, v = _pattern_search_rows(obj, s, cfg, feasible=feasible)
        if v < best_val:
            best_val, best_rows = v, rows
    if best_rows is None:
        # objective infinite on the whole feasible set
        return joint(base_seeds[0]), math.inf
    return joint(best_rows), best_val


def aux_structured_starts(nx: int, nz: int, nu: int) -> list[np.ndarray]:
    """Canonical auxiliary starts: U = const, U = Z, U = (X, Z) index."""
    starts = []
    const = np.zeros((nx, nz, nu))
    const[..., 0] = 1.0
    starts.append(const)
    if nu >= nz:
        uz = np.zeros((nx, nz, nu))
        for z in range(nz):
            uz[:, z, z] = 1.0
        starts.append(uz)
    if nu >= nx * nz:
        uxz = np.zeros((nx, nz, nu))
        for x in range(nx):
            for z in range(nz):
                uxz[x, z, x * nz + z] = 1.0
        starts.append(uxz)
    return starts


def maximize_over_aux(objective, x_z_shape: tuple, cfg: OptimizerConfig,
                      nu: int | None = None, seeds=None) -> tuple[AuxiliaryDecomposition, float]:
    """Best-effort maximization over auxiliary kernels P_{U|XZ}.

    Coordinate ascent, one (x, z) row at a time, over cfg.restarts seeded
    initializations. The returned value is a certified lower bound on
    the true maximum, not the maximum itself.
    """
    nx, nz = x_z_shape
    if nu is None:
        nu = nx * nx * nz + 1
    starts = aux_structured_starts(nx, nz, nu)
    if seeds:
        starts = [np.asarray(s, dtype=float) for s in seeds] + starts
    for i in range(max(cfg.restarts - len(starts), 0)):
        rng = cfg.rng(100 + i)
        starts.append(rng.dirichlet(np.ones(nu), size=(nx, nz)))

    best_arr, best_val = None, -math.inf
    for s in starts:
        arr, v = _pattern_search_rows(objective, s, cfg, maximize=True)
        if v > best_val:
            best_val, best_arr = v, arr
    return AuxiliaryDecomposition(kernel=best_arr, nu=nu), best_val
