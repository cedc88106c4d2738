"""The genie-receiver upper bound and its derived objects.

Primal and dual forms, the pairwise distance, the rate-free zero-rate
quantity, the alpha broadcast family, the simpler E_B form, the
symmetric relaxation, the closed BSC form, and the approximation
function that sits between the lower and upper bounds.

For binary inputs the maximization over the auxiliary kernel is exact:
realizable couplings given z are precisely the symmetric couplings with
diagonal at least the squared marginal, so the inner maximum is the
concave envelope of a quadratic form with zero diagonal, which
evaluates to 2 a (1-a) max(d, 0) per z-slice. The witness kernel is
reconstructed explicitly, so the reported value is always an achieved
lower bound of the maximum, never an estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .classic import e_sp
from .optimize import (
    AuxiliaryDecomposition,
    OptimizerConfig,
    maximize_over_aux,
    maximize_scan_1d,
)
from .pairwise import PairwiseProblem, log_tilted_sum
from .probability import (
    NEG_INF,
    BroadcastKernel,
    ChannelKernel,
    DecodingMetric,
    JointDist,
    ProbVec,
    ValidationError,
    is_balanced,
    metric_supports_channel,
    ml_metric,
    mutual_information_raw,
)

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class GenieEvaluation:
    """Result of a genie-bound evaluation with solver diagnostics."""

    value: float
    argmin_pxz: np.ndarray
    aux: AuxiliaryDecomposition | None
    s_star: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.value < -1e-12:
            raise ValidationError("GenieEvaluation: negative value")
        gap = self.diagnostics.get("duality_gap")
        if gap is not None and math.isfinite(gap) and gap > 1e-3:
            raise ValidationError(f"GenieEvaluation: duality gap {gap:g} exceeds 1e-3")
        object.__setattr__(self, "value", max(float(self.value), 0.0))


@dataclass(frozen=True)
class AlphaFamily:
    """Mixing parameter for the two-output broadcast construction."""

    alpha: float
    base: ChannelKernel
    q_z: ProbVec | None = None  # default: uniform over the y alphabet

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError("AlphaFamily: alpha outside [0,1]")
        if self.q_z is not None and self.q_z.size != self.base.ny:
            raise ValidationError("AlphaFamily: Q_Z must live on the y alphabet")


def broadcast_alpha(fam: AlphaFamily) -> BroadcastKernel:
    """W(y,z|x) = W(y|x) [alpha 1{z=y} + (1-alpha) Q_Z(z)], with Z = Y."""
    w = fam.base.rows
    ny = fam.base.ny
    qz = fam.q_z.weights if fam.q_z is not None else np.full(ny, 1.0 / ny)
    eye = np.eye(ny)
    mix = fam.alpha * eye + (1.0 - fam.alpha) * qz[None, :]
    return BroadcastKernel(weights=w[:, :, None] * mix[None, :, :], base=fam.base)


def pair_distance(wyxz: np.ndarray, q: DecodingMetric, x: int, xt: int,
                  z: int, s: float) -> float:
    """Symmetric tilt distance between inputs x and xt given z, at tilt s."""
    wyxz = np.asarray(wyxz, dtype=float)
    for a in (x, xt):
        if wyxz[a, z].sum() <= 0.0:
            raise ValidationError(f"pair_distance: conditional row ({a},{z}) undefined")
    d_xxt = q.scores[xt] - q.scores[x]
    d_xtx = -d_xxt
    d_xxt = np.where(np.isnan(d_xxt), NEG_INF, d_xxt)
    d_xtx = np.where(np.isnan(d_xtx), NEG_INF, d_xtx)
    a = log_tilted_sum(wyxz[x, z], d_xxt, s)
    b = log_tilted_sum(wyxz[xt, z], d_xtx, s)
    return -0.5 * (a + b)


class _PairGrid:
    """Pair distances of one conditional channel, cached on an s-grid.

    The distances do not depend on the coupling, so one grid serves the
    whole outer search over P_XZ. Grids extend themselves when the
    argmax lands near the right edge.
    """

    def __init__(self, wyxz: np.ndarray, q: DecodingMetric, s_hi: float = 8.0,
                 n: int = 1025, s_cap: float = 1e4):
        self.wyxz = np.asarray(wyxz, dtype=float)
        self.q = q
        self.nx, self.nz, self.ny = self.wyxz.shape
        self.s_cap = s_cap
        self._build(s_hi, n)

    def _log_sums(self, x: int, xt: int, s_grid: np.ndarray) -> np.ndarray:
        """log sum_y W(y|x,z) e^{s dq} for the grid; shape (n_s, nz)."""
        d = self.q.scores[xt] - self.q.scores[x]
        d = np.where(np.isnan(d), NEG_INF, d)
        out = np.full((s_grid.size, self.nz), NEG_INF)
        for z in range(self.nz):
            w = self.wyxz[x, z]
            act = (w > 0) & ~np.isneginf(d)
            if np.any((w > 0) & np.isposinf(d)):
                out[:, z] = math.inf
                continue
            if not np.any(act):
                continue
            mat = np.log(w[act])[None, :] + np.outer(s_grid, d[act])
            mx = mat.max(axis=1)
            out[:, z] = mx + np.log(np.exp(mat - mx[:, None]).sum(axis=1))
            if s_grid[0] == 0.0:
                out[0, z] = math.log(w[w > 0].sum())
        return out

    def _build(self, s_hi: float, n: int):
        self.s_grid = np.linspace(0.0, s_hi, n)
        self.d = np.empty((self.nx, self.nx, n, self.nz))
        for x in range(self.nx):
            self.d[x, x] = 0.0
            for xt in range(x + 1, self.nx):
                a = self._log_sums(x, xt, self.s_grid)
                b = self._log_sums(xt, x, self.s_grid)
                self.d[x, xt] = -0.5 * (a + b)
                self.d[xt, x] = self.d[x, xt]

    def ensure_interior(self, best_idx: int) -> bool:
        """Extend the grid (up to the cap) when the best index is at the edge."""
        if best_idx >= self.s_grid.size - 2 and self.s_grid[-1] < self.s_cap:
            self._build(min(self.s_grid[-1] * 4.0, self.s_cap), self.s_grid.size)
            return True
        return False

    def exact_d(self, x: int, xt: int, z: int, s: float) -> float:
        return pair_distance(self.wyxz, self.q, x, xt, z, s)


def _binary_envelope_max(pxz: np.ndarray, grid: _PairGrid, refine: bool = True):
    """Exact aux maximum for binary inputs: (value, s_star).

    sup over s of sum_z P_Z(z) 2 a0 a1 max(d_z(s), 0), where a0 is the
    posterior P(X=0|z). Grid scan plus an exact ternary refinement.
    """
    pz = pxz.sum(axis=0)
    weights = np.zeros(grid.nz)
    for z in range(grid.nz):
        if pz[z] > 0:
            a0 = pxz[0, z] / pz[z]
            weights[z] = pz[z] * 2.0 * a0 * (1.0 - a0)
    active = weights > 0
    if not np.any(active):
        return 0.0, 0.0
    d01 = grid.d[0, 1]  # (n_s, nz)
    while True:
        vals = np.clip(d01, 0.0, None)[:, active] @ weights[active]
        i = int(np.argmax(vals))
        if grid.ensure_interior(i):
            d01 = grid.d[0, 1]
            continue
        break
    best_v, best_s = float(vals[i]), float(grid.s_grid[i])
    if not math.isfinite(best_v):
        return math.inf, best_s
    if refine:
        zs = np.flatnonzero(active)

        def f(s):
            tot = 0.0
            for z in zs:
                d = grid.exact_d(0, 1, int(z), s)
                if d > 0:
                    tot += weights[z] * d
            return tot

        lo = grid.s_grid[max(i - 1, 0)]
        hi = grid.s_grid[min(i + 1, grid.s_grid.size - 1)]
        for _ in range(60):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if f(m1) < f(m2):
                lo = m1
            else:
                hi = m2
        s_ref = 0.5 * (lo + hi)
        v_ref = f(s_ref)
        if v_ref > best_v:
            best_v, best_s = v_ref, s_ref
    return best_v, best_s


def _binary_envelope_witness(pxz: np.ndarray, grid: _PairGrid, s_star: float,
                             nu: int) -> AuxiliaryDecomposition:
    """Auxiliary kernel achieving the binary envelope value.

    Where the optimal slice keeps its off-diagonal mass (d > 0 at the
    optimal tilt) the witness splits z into two pure atoms; elsewhere a
    single atom reproduces the posterior, making the coupling diagonal.
    """
    nz = grid.nz
    kernel = np.zeros((2, nz, nu))
    pz = pxz.sum(axis=0)
    for z in range(nz):
        if pz[z] <= 0:
            kernel[:, z, 0] = 1.0
            continue
        a0 = pxz[0, z] / pz[z]
        split = 0.0 < a0 < 1.0 and grid.exact_d(0, 1, z, s_star) > 0
        if split:
            # atoms u = 2z (X = 0) and u = 2z+1 (X = 1)
            kernel[0, z, (2 * z) % nu] = 1.0
            kernel[1, z, (2 * z + 1) % nu] = 1.0
        else:
            kernel[:, z, (2 * z) % nu] = 1.0
    return AuxiliaryDecomposition(kernel=kernel, nu=nu)


def _aux_coupling(pxz: np.ndarray, aux_rows: np.ndarray) -> np.ndarray:
    """Induced pair weights w(x, xt, z) = sum_u P(x,z,u) P(xt|z,u)."""
    nx, nz, nu = aux_rows.shape
    pxzu = pxz[:, :, None] * aux_rows
    pzu = pxzu.sum(axis=0)
    w = np.zeros((nx, nx, nz))
    for z in range(nz):
        for u in range(nu):
            if pzu[z, u] > 0:
                col = pxzu[:, z, u]
                w[:, :, z] += np.outer(col, col) / pzu[z, u]
    return w


def eta(pxzu, wyxz: np.ndarray, q: DecodingMetric,
        cfg: OptimizerConfig | None = None) -> tuple[float, float]:
    """Dual objective of the inner minimization: (value, s_star).

    sup over s >= 0 of the weighted negative log tilted sums under the
    coupling induced by P_XZU. The symmetric pair-distance form is
    evaluated at the argmax and must agree to 1e-9; the two are
    algebraically identical for exchangeable couplings.
    """
    cfg = cfg or OptimizerConfig()
    arr = pxzu.weights if isinstance(pxzu, JointDist) else np.asarray(pxzu, dtype=float)
    if arr.ndim != 3:
        raise ValidationError("eta: P_XZU must have three factors (x, z, u)")
    nx, nz, nu = arr.shape
    pxz = arr.sum(axis=2)
    pzu = arr.sum(axis=0)
    w = np.zeros((nx, nx, nz))
    for z in range(nz):
        for u in range(nu):
            if pzu[z, u] > 0:
                col = arr[:, z, u]
                w[:, :, z] += np.outer(col, col) / pzu[z, u]
    wyxz = np.asarray(wyxz, dtype=float)
    for x in range(nx):
        for z in range(nz):
            if pxz[x, z] > 0 and wyxz[x, z].sum() <= 0:
                raise ValidationError("eta: conditional channel undefined on the support")
    prob = PairwiseProblem(w, wyxz, q.scores)
    val, s_star, hit = prob.dual(cfg)
    if hit:
        warnings.warn("eta: s hit the cap (unbalanced suspicion)", RuntimeWarning,
                      stacklevel=2)
    if math.isfinite(val):
        sym = 0.0
        for (x, xt, z) in prob.cells:
            if x != xt:
                sym += w[x, xt, z] * pair_distance(wyxz, q, x, xt, z, s_star)
        if abs(sym - prob.dual_objective(s_star)) > 1e-9:
            raise ValidationError("eta: symmetric distance form disagrees with the dual form")
    return val, s_star


def phi_divergence(pxzu, p_y_xzxt: np.ndarray, wyxz: np.ndarray) -> float:
    """Coupling-weighted conditional divergence of P_{Y|XZXt} from W_{Y|XZ}."""
    arr = pxzu.weights if isinstance(pxzu, JointDist) else np.asarray(pxzu, dtype=float)
    rows = np.asarray(p_y_xzxt, dtype=float)  # (x, z, xt, y)
    wyxz = np.asarray(wyxz, dtype=float)
    nx, nz, _ = arr.shape
    if rows.shape[:3] != (nx, nz, nx) or rows.shape[3] != wyxz.shape[2]:
        raise ValidationError("phi_divergence: shape mismatch")
    pzu = arr.sum(axis=0)
    total = 0.0
    for z in range(nz):
        for u in range(arr.shape[2]):
            if pzu[z, u] <= 0:
                continue
            for x in range(nx):
                for xt in range(nx):
                    wgt = arr[x, z, u] * arr[xt, z, u] / pzu[z, u]
                    if wgt <= 0:
                        continue
                    v = rows[x, z, xt]
                    mask = v > 0
                    if np.any(mask & (wyxz[x, z] == 0)):
                        return math.inf
                    total += wgt * float(np.sum(v[mask] * np.log(v[mask] / wyxz[x, z][mask])))
    return total


def _z_divergence(pxz: np.ndarray, wzx: np.ndarray, px: np.ndarray) -> float:
    """D(P_{Z|X} || W_{Z|X} | P) from the joint P_XZ."""
    total = 0.0
    for x in range(pxz.shape[0]):
        if px[x] <= 0:
            continue
        for z in range(pxz.shape[1]):
            if pxz[x, z] > 0:
                if wzx[x, z] <= 0:
                    return math.inf
                total += pxz[x, z] * math.log(pxz[x, z] / (px[x] * wzx[x, z]))
    return total


def max_eta_over_aux(pxz: np.ndarray, wyxz: np.ndarray, q: DecodingMetric,
                     cfg: OptimizerConfig, grid: _PairGrid | None = None):
    """(value, aux, s_star) of the aux maximization at fixed P_XZ.

    Binary inputs use the exact envelope; larger alphabets fall back to
    seeded coordinate ascent, whose value is a lower bound on the max.
    """
    nx, nz = pxz.shape
    nu = nx * nx * nz + 1
    if nx == 2:
        grid = grid or _PairGrid(wyxz, q, s_cap=cfg.s_max_cap)
        val, s_star = _binary_envelope_max(pxz, grid)
        aux = _binary_envelope_witness(pxz, grid, s_star, nu)
        return val, aux, s_star

    def objective(aux_rows):
        w = _aux_coupling(pxz, aux_rows)
        prob = PairwiseProblem(w, wyxz, q.scores)
        v, _, _ = prob.dual(cfg)
        return v

    aux, val = maximize_over_aux(objective, (nx, nz), cfg, nu=nu)
    w = _aux_coupling(pxz, aux.kernel)
    _, s_star, _ = PairwiseProblem(w, wyxz, q.scores).dual(cfg)
    return val, aux, s_star


def genie_bound_fixed(pxz, wyz: BroadcastKernel, q: DecodingMetric,
                      cfg: OptimizerConfig | None = None,
                      check_primal: bool | None = None) -> GenieEvaluation:
    """Genie bound at a fixed joint P_XZ: divergence term plus aux maximum.

    On small shapes the inner minimum is re-solved on the primal side at
    the same coupling and the duality gap is recorded.
    """
    cfg = cfg or OptimizerConfig()
    pxz = pxz.weights if isinstance(pxz, JointDist) else np.asarray(pxz, dtype=float)
    px = pxz.sum(axis=1)
    wzx = wyz.z_given_x()
    wyxz, defined = wyz.y_given_xz()
    for x in range(pxz.shape[0]):
        for z in range(pxz.shape[1]):
            if pxz[x, z] > 0 and not defined[x, z]:
                return GenieEvaluation(value=math.inf, argmin_pxz=pxz, aux=None,
                                       s_star=0.0,
                                       diagnostics={"undefined_support": True})
    dterm = _z_divergence(pxz, wzx, px)
    if math.isinf(dterm):
        return GenieEvaluation(value=math.inf, argmin_pxz=pxz, aux=None, s_star=0.0,
                               diagnostics={"infinite_divergence": True})
    val, aux, s_star = max_eta_over_aux(pxz, wyxz, q, cfg)
    diagnostics = {"eta": val, "d_term": dterm, "restarts": cfg.restarts,
                   "hit_cap": False}
    if check_primal is None:
        check_primal = pxz.size * wyxz.shape[2] <= 16
    if check_primal and aux is not None and math.isfinite(val):
        w = _aux_coupling(pxz, aux.kernel)
        prob = PairwiseProblem(w, wyxz, q.scores)
        dual_v, _, _ = prob.dual(cfg)
        try:
            primal_v = prob.primal()
            diagnostics["duality_gap"] = abs(primal_v - dual_v)
        except ValueError:
            diagnostics["duality_gap"] = math.inf
    return GenieEvaluation(value=dterm + val, argmin_pxz=pxz, aux=aux,
                           s_star=s_star, diagnostics=diagnostics)


def _info_of(pxz: np.ndarray) -> float:
    return mutual_information_raw(pxz)


def _symmetric_gamma_scan(R: float, px: np.ndarray, objective, n: int = 257):
    """1-D scan over symmetric binary P_{Z|X} = BSC(gamma), information-feasible."""
    from .classic import _h2_inverse
    g_lo = _h2_inverse(max(LOG2 - R, 0.0))
    best_v, best_pxz = math.inf, None

    def value_at(g):
        rows = np.array([[1.0 - g, g], [g, 1.0 - g]])
        pxz = px[:, None] * rows
        if _info_of(pxz) > R + 1e-11:
            return math.inf, pxz
        return objective(pxz), pxz

    gs = np.linspace(min(g_lo + 1e-12, 0.5), 0.5, n)
    vals = []
    for g in gs:
        v, pxz = value_at(g)
        vals.append(v)
        if v < best_v:
            best_v, best_pxz = v, pxz
    i = int(np.argmin(vals))
    lo = gs[max(i - 1, 0)]
    hi = gs[min(i + 1, n - 1)]
    for _ in range(60):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if value_at(m1)[0] > value_at(m2)[0]:
            lo = m1
        else:
            hi = m2
    v, pxz = value_at(0.5 * (lo + hi))
    if v < best_v:
        best_v, best_pxz = v, pxz
    return best_pxz, best_v


def _pattern_min_pxz(R: float, px: np.ndarray, nz: int, objective,
                     cfg: OptimizerConfig, seeds=None):
    """Pattern search over P_{Z|X} rows under the information cap."""
    from .optimize import info_constrained_min
    P = ProbVec(px)
    return info_constrained_min(objective, P, R, cfg, nz=nz, seeds=seeds)


def genie_bound(R: float, P: ProbVec, wyz: BroadcastKernel, q: DecodingMetric,
                cfg: OptimizerConfig | None = None,
                extra_seeds=None) -> GenieEvaluation:
    """Genie upper bound at rate R and composition P for one genie channel.

    The reported value is min(best search value, symmetric relaxation),
    which stays a certified upper bound even if the aux ascent
    under-maximizes; the search value itself is also recorded.
    """
    cfg = cfg or OptimizerConfig()
    if R < 0:
        raise ValidationError("genie_bound: R must be nonnegative")
    base = wyz.y_marginal()
    if not is_balanced(base, q):
        warnings.warn("genie_bound: channel/metric pair is not balanced; the bound "
                      "claim is void", RuntimeWarning, stacklevel=2)
    px = P.weights
    nx, nz = wyz.nx, wyz.nz
    wzx = wyz.z_given_x()
    wyxz, _ = wyz.y_given_xz()
    grid = _PairGrid(wyxz, q, s_cap=cfg.s_max_cap) if nx == 2 else None

    def objective(pxz):
        d = _z_divergence(pxz, wzx, px)
        if math.isinf(d):
            return math.inf
        if nx == 2:
            v, _ = _binary_envelope_max(pxz, grid, refine=False)
        else:
            v, _, _ = max_eta_over_aux(pxz, wyxz, q, cfg)
        return d + v

    seeds = [wzx.copy()]
    try:
        _, v_sp = e_sp(R, P, base, cfg, return_argmin=True)
        if v_sp.shape == (nx, nz):
            seeds.append(v_sp)
    except ValidationError:
        pass
    if extra_seeds:
        seeds.extend(np.asarray(s, dtype=float) for s in extra_seeds)

    candidates = []
    pxz_pat, v_pat = _pattern_min_pxz(R, px, nz, objective, cfg, seeds=seeds)
    candidates.append((v_pat, pxz_pat))
    symmetric_ok = (nx == 2 and nz == 2 and abs(px[0] - 0.5) < 1e-12)
    if symmetric_ok:
        pxz_sym, v_sym = _symmetric_gamma_scan(R, px, objective)
        if pxz_sym is not None:
            candidates.append((v_sym, pxz_sym))
    v_best, pxz_best = min(candidates, key=lambda t: t[0])
    if not math.isfinite(v_best):
        # no finite value on the feasible set (positive zero-error capacity)
        return GenieEvaluation(value=math.inf, argmin_pxz=pxz_best, aux=None,
                               s_star=0.0,
                               diagnostics={"search_value": math.inf,
                                            "e_sym": math.inf,
                                            "restarts": cfg.restarts,
                                            "hit_cap": False})
    # exact refinement at the winner (the search used the unrefined grid)
    if nx == 2:
        eta_v, s_star = _binary_envelope_max(pxz_best, grid, refine=True)
        aux = _binary_envelope_witness(pxz_best, grid, s_star, nx * nx * nz + 1)
        v_best = _z_divergence(pxz_best, wzx, px) + eta_v
        # for binary inputs the symmetric relaxation is exactly the aux
        # maximum (the two coupling sets coincide), so no separate solve
        sym_v = v_best
    else:
        eta_v, aux, s_star = max_eta_over_aux(pxz_best, wyxz, q, cfg)
        v_best = _z_divergence(pxz_best, wzx, px) + eta_v
        sym_v = e_sym(R, P, wyz, q, cfg)
    if sym_v < v_best - 1e-6:
        warnings.warn("genie_bound: symmetric relaxation fell below the search value; "
                      "reporting the certified minimum", RuntimeWarning, stacklevel=2)
    reported = min(v_best, sym_v)
    return GenieEvaluation(
        value=reported, argmin_pxz=pxz_best, aux=aux, s_star=s_star,
        diagnostics={"search_value": v_best, "e_sym": sym_v,
                     "restarts": cfg.restarts, "hit_cap": False},
    )


def genie_curve(Rgrid, P: ProbVec, wyz: BroadcastKernel, q: DecodingMetric,
                cfg: OptimizerConfig | None = None) -> list[GenieEvaluation]:
    """Genie bound on an increasing rate grid, chaining argmins as seeds.

    Each rate's feasible set contains the previous argmin, so chained
    values are nonincreasing by construction.
    """
    cfg = cfg or OptimizerConfig()
    out = []
    seeds = []
    for R in sorted(float(r) for r in Rgrid):
        ev = genie_bound(R, P, wyz, q, cfg, extra_seeds=seeds)
        px = P.weights
        rows = np.array([ev.argmin_pxz[x] / px[x] if px[x] > 0
                         else np.full(wyz.nz, 1.0 / wyz.nz)
                         for x in range(wyz.nx)])
        seeds = [rows]
        if out and ev.value > out[-1].value:
            ev = GenieEvaluation(value=out[-1].value, argmin_pxz=out[-1].argmin_pxz,
                                 aux=out[-1].aux, s_star=out[-1].s_star,
                                 diagnostics=dict(ev.diagnostics, reused_previous=True))
        out.append(ev)
    return out


def e_bar_zero(P: ProbVec, W: ChannelKernel, q: DecodingMetric,
               cfg: OptimizerConfig | None = None) -> float:
    """Rate-free zero-rate quantity: the genie aux maximum with a null z."""
    cfg = cfg or OptimizerConfig()
    if not metric_supports_channel(W, q):
        raise ValidationError("e_bar_zero: metric does not support the channel")
    pxz = P.weights[:, None]
    wyxz = W.rows[:, None, :]
    val, _, _ = max_eta_over_aux(pxz, wyxz, q, cfg)
    return val


def e_b(R: float, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
        cfg: OptimizerConfig | None = None, nz: int = 2) -> float:
    """Simpler-form bound: the genie objective with the z-free channel.

    Identical to the genie bound except that the pair distances use the
    base channel (no conditioning on z), so there is no divergence gain
    from the genie output; only the clustering of the coupling matters.
    For the ML metric the inner weight is the Bhattacharyya distance.
    """
    cfg = cfg or OptimizerConfig()
    if not metric_supports_channel(W, q):
        raise ValidationError("e_b: metric does not support the channel")
    px = P.weights
    nx = W.nx
    wyxz = np.repeat(W.rows[:, None, :], nz, axis=1)
    grid = _PairGrid(wyxz, q, s_cap=cfg.s_max_cap) if nx == 2 else None

    def objective(pxz):
        if nx == 2:
            v, _ = _binary_envelope_max(pxz, grid, refine=False)
            return v
        v, _, _ = max_eta_over_aux(pxz, wyxz, q, cfg)
        return v

    pxz_best, best = _pattern_min_pxz(R, px, nz, objective, cfg)
    if nx == 2 and nz == 2 and abs(px[0] - 0.5) < 1e-12:
        pxz_sym, v_sym = _symmetric_gamma_scan(R, px, objective)
        if v_sym < best:
            pxz_best, best = pxz_sym, v_sym
    if nx == 2:
        best, _ = _binary_envelope_max(pxz_best, grid, refine=True)
    return best


def e_sym(R: float, P: ProbVec, wyz: BroadcastKernel, q: DecodingMetric,
          cfg: OptimizerConfig | None = None) -> float:
    """Symmetric relaxation of the genie bound.

    The aux kernel is replaced by the polytope of symmetric couplings
    whose diagonal dominates the squared posterior. For binary inputs
    this coincides with the exact aux maximum; for larger alphabets the
    per-slice maximization is a linear program solved on an s-grid.
    """
    cfg = cfg or OptimizerConfig()
    px = P.weights
    nx, nz = wyz.nx, wyz.nz
    wzx = wyz.z_given_x()
    wyxz, _ = wyz.y_given_xz()
    if nx == 2:
        grid = _PairGrid(wyxz, q, s_cap=cfg.s_max_cap)

        def objective(pxz):
            d = _z_divergence(pxz, wzx, px)
            if math.isinf(d):
                return math.inf
            v, _ = _binary_envelope_max(pxz, grid, refine=False)
            return d + v

        seeds = [wzx.copy()]
        pxz_pat, v_pat = _pattern_min_pxz(R, px, nz, objective, cfg, seeds=seeds)
        best_pxz, best = pxz_pat, v_pat
        if nz == 2 and abs(px[0] - 0.5) < 1e-12:
            pxz_sym, v_sym = _symmetric_gamma_scan(R, px, objective)
            if v_sym < best:
                best_pxz, best = pxz_sym, v_sym
        v_ref, _ = _binary_envelope_max(best_pxz, grid, refine=True)
        return _z_divergence(best_pxz, wzx, px) + v_ref

    def objective(pxz):
        d = _z_divergence(pxz, wzx, px)
        if math.isinf(d):
            return math.inf
        return d + _sym_polytope_max(pxz, wyxz, q, cfg)

    _, val = _pattern_min_pxz(R, px, nz, objective, cfg, seeds=[wzx.copy()])
    return val


def _sym_polytope_max(pxz: np.ndarray, wyxz: np.ndarray, q: DecodingMetric,
                      cfg: OptimizerConfig, n_s: int = 96) -> float:
    """max over symmetric couplings (diagonal >= squared posterior) of the
    weighted pair distances, sup over s; per-slice linear programs."""
    from scipy.optimize import linprog

    nx, nz = pxz.shape
    pz = pxz.sum(axis=0)

    def slice_max(z: int, s: float) -> float:
        if pz[z] <= 0:
            return 0.0
        post = pxz[:, z] / pz[z]
        dmat = np.zeros((nx, nx))
        for x in range(nx):
            for xt in range(x + 1, nx):
                dmat[x, xt] = pair_distance(wyxz, q, x, xt, z, s)
        pairs = [(x, xt) for x in range(nx) for xt in range(x + 1, nx)]
        c = np.array([-2.0 * dmat[x, xt] for (x, xt) in pairs])  # maximize
        a_ub, b_ub = [], []
        for x in range(nx):
            row = np.array([1.0 if x in p else 0.0 for p in pairs])
            a_ub.append(row)
            b_ub.append(post[x] - post[x] ** 2)
        res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                      bounds=[(0.0, None)] * len(pairs), method="highs")
        return -res.fun if res.success else 0.0

    def f(s):
        return sum(pz[z] * slice_max(z, s) for z in range(nz))

    res = maximize_scan_1d(f, 0.0, 8.0, n=n_s, refine=30)
    return res.value


def bsc_genie_bound(Rgrid, p: float, wz_family=None,
                    cfg: OptimizerConfig | None = None) -> "BoundCurve":
    """Closed-form symmetric-relaxation curve for the BSC.

    Per rate and per genie kernel candidate: minimize over the symmetric
    cluster parameter gamma the z-divergence plus gamma(1-gamma) times
    the clipped pair-distance supremum; then minimize over the family.
    """
    from .classic import BoundCurve, _h2_inverse

    cfg = cfg or OptimizerConfig()
    if not 0.0 < p < 0.5:
        raise ValidationError("bsc_genie_bound: need 0 < p < 1/2")
    W = ChannelKernel.bsc(p)
    q = ml_metric(W)
    if wz_family is None:
        wz_family = default_wz_family(W)
    if not wz_family:
        raise ValidationError("bsc_genie_bound: empty kernel family")
    rates = sorted(float(r) for r in Rgrid)

    members = []
    for label, wzxy in wz_family:
        wyz = BroadcastKernel(weights=W.rows[:, :, None] * np.asarray(wzxy, dtype=float),
                              base=W)
        wzx = wyz.z_given_x()
        if np.any(wzx <= 0.0):
            # a zero genie-output probability makes the divergence term
            # infinite for every feasible gamma; the member can never win
            continue
        wyxz, _ = wyz.y_given_xz()
        grid = _PairGrid(wyxz, q, s_cap=cfg.s_max_cap)
        # Delta*(s) = sum over z of |d_z(s)|_+ for the (0,1) pair; rate-free
        d01 = grid.d[0, 1]
        while True:
            vals = np.clip(d01, 0.0, None).sum(axis=1)
            i = int(np.argmax(vals))
            if grid.ensure_interior(i):
                d01 = grid.d[0, 1]
                continue
            break

        def dsum(s, g=grid):
            tot = 0.0
            for z in range(2):
                d = g.exact_d(0, 1, z, s)
                if d > 0:
                    tot += d
            return tot

        lo = grid.s_grid[max(i - 1, 0)]
        hi = grid.s_grid[min(i + 1, grid.s_grid.size - 1)]
        for _ in range(60):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if dsum(m1) < dsum(m2):
                lo = m1
            else:
                hi = m2
        dstar = max(float(vals[i]), dsum(0.5 * (lo + hi)))
        members.append((label, wzx, dstar))

    def d_term(g, wzx):
        tot = 0.0
        for gg, wv in ((g, wzx[0, 1]), (1.0 - g, wzx[0, 0]),
                       (g, wzx[1, 0]), (1.0 - g, wzx[1, 1])):
            if gg > 0:
                if wv <= 0:
                    return math.inf
                tot += gg * math.log(gg / wv)
        return 0.5 * tot

    pts = []
    meta_members = []
    for R in rates:
        g_lo = _h2_inverse(max(LOG2 - R, 0.0))
        best, best_label = math.inf, None
        for label, wzx, dstar in members:
            def val(g):
                return d_term(g, wzx) + g * (1.0 - g) * dstar
            gs = np.linspace(min(g_lo, 0.5), 0.5, 257)
            vals = [val(g) for g in gs]
            i = int(np.argmin(vals))
            lo = gs[max(i - 1, 0)]
            hi = gs[min(i + 1, len(gs) - 1)]
            for _ in range(60):
                m1 = lo + (hi - lo) / 3.0
                m2 = hi - (hi - lo) / 3.0
                if val(m1) > val(m2):
                    lo = m1
                else:
                    hi = m2
            v = min(float(vals[i]), val(0.5 * (lo + hi)))
            if v < best:
                best, best_label = v, label
        pts.append((R, max(best, 0.0)))
        meta_members.append(best_label)
    return BoundCurve(name="E_bar_sym", points=tuple(pts),
                      meta={"winning_kernels": meta_members, "family_size": len(members)})


def default_wz_family(W: ChannelKernel, alpha_points: int = 17,
                      grid_points: int = 9, qz: ProbVec | None = None):
    """Default genie-kernel search family for binary channels.

    The alpha mixing family plus, for binary outputs, a three-parameter
    grid of kernels W_{Z|XY} with the (0,0)/(1,1) rows tied by the
    bit-flip symmetry.
    """
    ny = W.ny
    family = []
    qzw = qz.weights if qz is not None else np.full(ny, 1.0 / ny)
    eye = np.eye(ny)
    for a in np.linspace(0.0, 1.0, alpha_points):
        wzxy = a * eye[None, :, :] + (1.0 - a) * qzw[None, None, :]
        wzxy = np.repeat(wzxy, W.nx, axis=0)
        family.append((f"alpha={a:g}", wzxy))
    if W.nx == 2 and ny == 2:
        for a in np.linspace(0.0, 1.0, grid_points):
            for b in np.linspace(0.0, 1.0, grid_points):
                for c in np.linspace(0.0, 1.0, grid_points):
                    wzxy = np.empty((2, 2, 2))
                    wzxy[0, 0] = [1.0 - a, a]
                    wzxy[1, 1] = [a, 1.0 - a]
                    wzxy[0, 1] = [1.0 - b, b]
                    wzxy[1, 0] = [1.0 - c, c]
                    family.append((f"grid({a:g},{b:g},{c:g})", wzxy))
    return family


def e_orth(R: float, P: ProbVec, W: ChannelKernel, q: DecodingMetric,
           cfg: OptimizerConfig | None = None, nz: int = 2) -> float:
    """Approximation function between the lower and upper bounds.

    Outer search over P_{Z|X} under the information cap; the partner
    input is a conditionally independent copy given z; the inner minimum
    over P_{Y|XZXt} under the metric constraint is a smooth convex
    program solved from tilted starts.
    """
    cfg = cfg or OptimizerConfig()
    if not metric_supports_channel(W, q):
        raise ValidationError("e_orth: metric does not support the channel")
    px = P.weights
    # the inner solve dominates the cost; warm starts plus a coarser
    # outer tolerance keep it tractable on the smooth outer landscape
    outer_cfg = OptimizerConfig(tol_1d=cfg.tol_1d,
                                tol_simplex=max(cfg.tol_simplex, 1e-3),
                                grid_points_per_dim=cfg.grid_points_per_dim,
                                refinement_rounds=cfg.refinement_rounds,
                                restarts=1,
                                s_max_cap=cfg.s_max_cap, rng_seed=cfg.rng_seed)
    warm: dict = {}

    def objective(pxz):
        return _orth_inner(pxz, W, q, warm)

    _, val = _pattern_min_pxz(R, px, nz, objective, outer_cfg)
    if W.nx == 2 and nz == 2 and abs(px[0] - 0.5) < 1e-12:
        warm.clear()
        _, v_sym = _symmetric_gamma_scan(R, px, objective, n=33)
        val = min(val, v_sym)
    return val


def _orth_inner(pxz: np.ndarray, W: ChannelKernel, q: DecodingMetric,
                warm: dict | None = None) -> float:
    """min over P_{Y|XZXt} of D(P_{Y|X}||W|P) + I(Xt;Y|X,Z), metric-constrained.

    `warm`, when passed, carries the previous solution between calls of
    an outer search; the problem is convex, so a warm start only saves
    iterations.
    """
    from scipy.optimize import minimize
    from .pairwise import tilted_row

    nx, nz = pxz.shape
    ny = W.ny
    px = pxz.sum(axis=1)
    pz = pxz.sum(axis=0)
    post = np.zeros((nx, nz))
    for z in range(nz):
        if pz[z] > 0:
            post[:, z] = pxz[:, z] / pz[z]
    cells = []
    wgt = {}
    for x in range(nx):
        for z in range(nz):
            for xt in range(nx):
                m = pxz[x, z] * post[xt, z]
                if m > 0:
                    cells.append((x, z, xt))
                    wgt[(x, z, xt)] = m
    dq = {}
    for (x, z, xt) in cells:
        d = q.scores[xt] - q.scores[x]
        dq[(x, z, xt)] = np.where(np.isnan(d), NEG_INF, d)
    # active outputs per cell: channel support, finite metric drop
    act = {c: np.flatnonzero((W.rows[c[0]] > 0) & ~np.isneginf(dq[c])) for c in cells}
    offs = {}
    total = 0
    for c in cells:
        offs[c] = total
        total += act[c].size

    tiny = 1e-300

    def unpack(v):
        rows = {}
        for c in cells:
            r = np.zeros(ny)
            r[act[c]] = np.maximum(v[offs[c]:offs[c] + act[c].size], 0.0)
            rows[c] = r
        return rows

    def _fields(v):
        rows = unpack(v)
        vxy = np.zeros((nx, ny))
        bar = np.zeros((nx, nz, ny))
        for c in cells:
            vxy[c[0]] += wgt[c] * rows[c]
            bar[c[0], c[1]] += post[c[2], c[1]] * rows[c]
        return rows, vxy, bar

    def objective_v(v):
        rows, vxy, bar = _fields(v)
        D = float(np.sum(vxy[vxy > 0] * np.log(vxy[vxy > 0]
                                               / (px[:, None] * W.rows)[vxy > 0])))
        info = 0.0
        for c in cells:
            r = rows[c]
            mask = (r > 0) & (bar[c[0], c[1]] > 0)
            info += wgt[c] * float(np.sum(r[mask] * np.log(r[mask] / bar[c[0], c[1]][mask])))
        return D + info

    def objective_grad(v):
        rows, vxy, bar = _fields(v)
        g = np.zeros(total)
        for c in cells:
            x = c[0]
            r = rows[c]
            a = act[c]
            lv = np.log(np.maximum(vxy[x, a], tiny) / (px[x] * W.rows[x, a]))
            lr = np.log(np.maximum(r[a], tiny) / np.maximum(bar[x, c[1], a], tiny))
            g[offs[c]:offs[c] + a.size] = wgt[c] * (lv + 1.0 + lr)
        return g

    metric_coeff = np.zeros(total)
    for c in cells:
        metric_coeff[offs[c]:offs[c] + act[c].size] = wgt[c] * dq[c][act[c]]

    def metric_margin(v):
        return float(metric_coeff @ np.maximum(v, 0.0))

    cons = []
    for c in cells:
        sel = np.zeros(total)
        sel[offs[c]:offs[c] + act[c].size] = 1.0
        cons.append({"type": "eq",
                     "fun": (lambda v, s=sel: float(s @ v) - 1.0),
                     "jac": (lambda v, s=sel: s)})
    cons.append({"type": "ineq", "fun": metric_margin,
                 "jac": lambda v: metric_coeff})
    bounds = [(0.0, 1.0)] * total

    starts = []
    if warm is not None and warm.get("x") is not None and warm["x"].size == total:
        starts.append(warm["x"])
    for s in (0.5, 1.5):
        v0 = np.empty(total)
        ok = True
        for c in cells:
            r = tilted_row(W.rows[c[0]], dq[c], s)
            if r.sum() <= 0:
                ok = False
                break
            v0[offs[c]:offs[c] + act[c].size] = 0.95 * r[act[c]] + 0.05 / act[c].size
        if ok:
            starts.append(v0)
    best = math.inf
    for v0 in starts:
        res = minimize(objective_v, v0, jac=objective_grad, method="SLSQP",
                       bounds=bounds, constraints=cons,
                       options={"maxiter": 200, "ftol": 1e-12})
        v = np.asarray(res.x)
        rows = unpack(v)
        norm_ok = all(abs(rows[c].sum() - 1.0) < 1e-6 for c in cells)
        if not norm_ok:
            continue
        for c in cells:
            rows[c] = rows[c] / rows[c].sum()
        vv = np.concatenate([rows[c][act[c]] for c in cells])
        if metric_margin(vv) < -1e-9:
            continue
        val = objective_v(vv)
        if val < best:
            best = val
            if warm is not None:
                warm["x"] = vv.copy()
        if res.success and math.isfinite(best):
            break  # convex program: one converged start is global
    return best
