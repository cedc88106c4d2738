import math

import numpy as np
import pytest

from relbounds import (
    AlphaFamily,
    ChannelKernel,
    GenieEvaluation,
    OptimizerConfig,
    ProbVec,
    ValidationError,
    broadcast_alpha,
    bsc_genie_bound,
    capacity,
    default_wz_family,
    e_b,
    e_bar_zero,
    e_ck,
    e_orth,
    e_sp,
    e_sym,
    eta,
    genie_bound,
    genie_bound_fixed,
    genie_curve,
    ml_metric,
    pair_distance,
    phi_divergence,
    straight_line_bound,
    zero_rate_exponent,
)
from relbounds.classic import max_over_input
from relbounds.probability import BroadcastKernel

from conftest import LOG2, bsc_esp_oracle

R_GRID = np.linspace(0.025, 0.5, 20) * LOG2
BHAT = -math.log(2 * math.sqrt(0.09))  # 0.5108...


@pytest.fixture(scope="module")
def wyz_identity(bsc01):
    return broadcast_alpha(AlphaFamily(alpha=1.0, base=bsc01))


@pytest.fixture(scope="module")
def wyz_independent(bsc01):
    return broadcast_alpha(AlphaFamily(alpha=0.0, base=bsc01))


class TestBroadcastAlpha:
    def test_alpha_one_is_deterministic(self, bsc01, wyz_identity):
        w = wyz_identity.weights
        for x in range(2):
            for y in range(2):
                assert w[x, y, y] == pytest.approx(bsc01.rows[x, y], abs=1e-15)
                assert w[x, y, 1 - y] == 0.0

    def test_alpha_zero_is_uniform_z(self, bsc01, wyz_independent):
        assert np.allclose(wyz_independent.z_given_x(), 0.5)

    def test_alpha_half_marginal_recovers_base(self, bsc01):
        wyz = broadcast_alpha(AlphaFamily(alpha=0.5, base=bsc01))
        assert np.allclose(wyz.y_marginal().rows, bsc01.rows)

    def test_alpha_domain(self, bsc01):
        with pytest.raises(ValidationError):
            AlphaFamily(alpha=1.5, base=bsc01)


class TestPairDistance:
    def test_same_symbol_is_zero(self, bsc01, ml01, wyz_independent):
        wyxz, _ = wyz_independent.y_given_xz()
        for s in (0.0, 0.3, 1.7):
            assert pair_distance(wyxz, ml01, 0, 0, 0, s) == pytest.approx(0.0, abs=1e-12)

    def test_zero_tilt_is_zero(self, bsc01, ml01, wyz_independent):
        wyxz, _ = wyz_independent.y_given_xz()
        assert pair_distance(wyxz, ml01, 0, 1, 0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_bhattacharyya_point(self, bsc01, ml01, wyz_independent):
        # collapsed z: the conditional equals the base channel
        wyxz, _ = wyz_independent.y_given_xz()
        assert pair_distance(wyxz, ml01, 0, 1, 0, 0.5) == pytest.approx(BHAT, abs=1e-12)

    def test_swap_symmetry_exact(self, bsc01, ml01):
        wyz = broadcast_alpha(AlphaFamily(alpha=0.3, base=bsc01))
        wyxz, _ = wyz.y_given_xz()
        for s in (0.2, 0.5, 1.1):
            for z in range(2):
                assert pair_distance(wyxz, ml01, 0, 1, z, s) == pair_distance(
                    wyxz, ml01, 1, 0, z, s)

    def test_undefined_row_raises(self, bsc01, ml01):
        weights = np.zeros((2, 2, 2))
        weights[:, :, 0] = bsc01.rows
        bk = BroadcastKernel(weights=weights, base=bsc01)
        wyxz, _ = bk.y_given_xz()
        with pytest.raises(ValidationError):
            pair_distance(wyxz, ml01, 0, 1, 1, 0.5)


class TestEta:
    def test_degenerate_partner_gives_zero(self, bsc01, ml01, fast_cfg):
        # U = (X,Z) index makes the partner a copy of the input
        pxzu = np.zeros((2, 2, 4))
        for x in range(2):
            for z in range(2):
                pxzu[x, z, 2 * x + z] = 0.25
        wyxz = np.repeat(bsc01.rows[:, None, :], 2, axis=1)
        val, _ = eta(pxzu, wyxz, ml01, fast_cfg)
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_null_z_uniform(self, bsc01, ml01, uniform2, fast_cfg):
        pxzu = uniform2.weights[:, None, None]  # null Z, degenerate U
        val, s_star = eta(pxzu, bsc01.rows[:, None, :], ml01, fast_cfg)
        assert val == pytest.approx(0.5 * BHAT, abs=1e-9)
        assert s_star == pytest.approx(0.5, abs=1e-4)

    def test_value_at_zero_tilt_only(self, bsc01, ml01, uniform2, fast_cfg):
        # restricting the tilt to zero gives zero by definition
        from relbounds.pairwise import PairwiseProblem

        w = np.multiply.outer(uniform2.weights, uniform2.weights)[:, :, None]
        prob = PairwiseProblem(w, bsc01.rows[:, None, :], ml01.scores)
        assert prob.dual_objective(0.0) == pytest.approx(0.0, abs=1e-12)


class TestPhiDivergence:
    def test_zero_at_channel(self, bsc01, fast_cfg):
        pxzu = np.full((2, 2, 1), 0.25)
        wyxz = np.repeat(bsc01.rows[:, None, :], 2, axis=1)
        rows = np.repeat(wyxz[:, :, None, :], 2, axis=2)  # (x, z, xt, y)
        assert phi_divergence(pxzu, rows, wyxz) == pytest.approx(0.0, abs=1e-15)

    def test_single_perturbed_row(self, bsc01):
        # unit mass on one (x,z,xt) cell, row [1,0] against channel row [0.9,0.1]
        pxzu = np.zeros((2, 1, 1))
        pxzu[0, 0, 0] = 1.0
        wyxz = bsc01.rows[:, None, :]
        rows = np.repeat(wyxz[:, :, None, :], 2, axis=2).copy()
        rows[0, 0, 0] = [1.0, 0.0]
        val = phi_divergence(pxzu, rows, wyxz)
        assert val == pytest.approx(math.log(1 / 0.9), abs=1e-12)
        assert val == pytest.approx(0.105361, abs=1e-6)

    def test_nonnegative_on_random_instances(self, bsc01):
        rng = np.random.default_rng(17)
        wyxz = np.repeat(bsc01.rows[:, None, :], 2, axis=1)
        for _ in range(100):
            pxzu = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
            rows = rng.dirichlet(np.ones(2), size=(2, 2, 2))
            assert phi_divergence(pxzu, rows, wyxz) >= -1e-12

    def test_absolute_continuity(self):
        w = ChannelKernel(np.eye(2))
        pxzu = np.full((2, 1, 1), 0.5)
        wyxz = w.rows[:, None, :]
        rows = np.repeat(wyxz[:, :, None, :], 2, axis=2).copy()
        rows[0, 0, 0] = [0.5, 0.5]
        assert phi_divergence(pxzu, rows, wyxz) == math.inf


class TestGenieFixed:
    def test_trivial_zero(self, bsc01, ml01, uniform2, fast_cfg, wyz_identity):
        pxz = uniform2.weights[:, None] * wyz_identity.z_given_x()
        ev = genie_bound_fixed(pxz, wyz_identity, ml01, fast_cfg)
        assert ev.value == pytest.approx(0.0, abs=1e-12)

    def test_null_z_reduces_to_zero_rate_quantity(self, bsc01, ml01, uniform2, fast_cfg):
        wyz = BroadcastKernel(weights=bsc01.rows[:, :, None], base=bsc01)
        pxz = uniform2.weights[:, None]
        ev = genie_bound_fixed(pxz, wyz, ml01, fast_cfg)
        assert ev.value == pytest.approx(e_bar_zero(uniform2, bsc01, ml01, fast_cfg),
                                         abs=1e-9)

    def test_seeded_instances_have_tiny_duality_gap(self, bsc01, ml01, fast_cfg):
        rng = np.random.default_rng(23)
        for _ in range(5):
            alpha = float(rng.uniform(0.1, 0.9))
            wyz = broadcast_alpha(AlphaFamily(alpha=alpha, base=bsc01))
            rows = rng.dirichlet(np.ones(2), size=2)
            pxz = np.array([0.5, 0.5])[:, None] * rows
            ev = genie_bound_fixed(pxz, wyz, ml01, fast_cfg)
            gap = ev.diagnostics.get("duality_gap")
            assert gap is not None and gap <= 1e-3

    def test_infinite_divergence_branch(self, bsc01, ml01, fast_cfg):
        # the genie output never takes z = 1, yet P_XZ puts mass there
        weights = np.zeros((2, 2, 2))
        weights[:, :, 0] = bsc01.rows
        wyz = BroadcastKernel(weights=weights, base=bsc01)
        pxz = np.full((2, 2), 0.25)
        ev = genie_bound_fixed(pxz, wyz, ml01, fast_cfg)
        assert math.isinf(ev.value)

    def test_evaluation_invariants(self):
        with pytest.raises(ValidationError):
            GenieEvaluation(value=-0.5, argmin_pxz=np.eye(2) / 2, aux=None, s_star=0.0)
        with pytest.raises(ValidationError):
            GenieEvaluation(value=0.5, argmin_pxz=np.eye(2) / 2, aux=None, s_star=0.0,
                            diagnostics={"duality_gap": 0.5})


class TestGenieBound:
    def test_z_useless_at_high_rate(self, bsc01, ml01, uniform2, fast_cfg,
                                    wyz_independent):
        ev = genie_bound(math.log(2), uniform2, wyz_independent, ml01, fast_cfg)
        target = e_bar_zero(uniform2, bsc01, ml01, fast_cfg)
        assert ev.value == pytest.approx(target, abs=1e-6)

    def test_z_equals_y_dominated_by_esp(self, bsc01, ml01, uniform2, fast_cfg,
                                         wyz_identity):
        for ev, R in zip(genie_curve(R_GRID, uniform2, wyz_identity, ml01, fast_cfg),
                         R_GRID):
            assert ev.value <= e_sp(R, uniform2, bsc01, fast_cfg) + 1e-6

    def test_monotone_in_rate(self, bsc01, ml01, uniform2, fast_cfg):
        wyz = broadcast_alpha(AlphaFamily(alpha=0.6, base=bsc01))
        evs = genie_curve(R_GRID, uniform2, wyz, ml01, fast_cfg)
        vals = [ev.value for ev in evs]
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-6

    def test_search_value_not_above_symmetric_relaxation(self, bsc01, ml01, uniform2,
                                                         fast_cfg):
        wyz = broadcast_alpha(AlphaFamily(alpha=0.4, base=bsc01))
        ev = genie_bound(0.1 * LOG2, uniform2, wyz, ml01, fast_cfg)
        assert ev.diagnostics["search_value"] <= ev.diagnostics["e_sym"] + 1e-6

    def test_unbalanced_warns_and_diverges(self, fast_cfg):
        # positive zero-error capacity: the bound claim is void and the
        # objective is infinite on the whole feasible set
        w = ChannelKernel(np.eye(2))
        wyz = broadcast_alpha(AlphaFamily(alpha=0.5, base=w))
        with pytest.warns(RuntimeWarning):
            ev = genie_bound(0.1, ProbVec.uniform(2), wyz, ml_metric(w), fast_cfg)
        assert math.isinf(ev.value)


class TestEBarZero:
    def test_bsc_value(self, bsc01, ml01, uniform2, fast_cfg):
        assert e_bar_zero(uniform2, bsc01, ml01, fast_cfg) == pytest.approx(
            0.255413, abs=1e-6)

    def test_single_input(self, fast_cfg):
        w = ChannelKernel(np.array([[0.3, 0.7]]))
        v = e_bar_zero(ProbVec(np.array([1.0])), w, ml_metric(w), fast_cfg)
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_max_over_p_matches_zero_rate(self, bsc01, ml01, fast_cfg):
        _, vbar = max_over_input(
            lambda P: e_bar_zero(P, bsc01, ml01, fast_cfg), 2, fast_cfg)
        _, vzr = max_over_input(
            lambda P: zero_rate_exponent(P, bsc01, ml01, fast_cfg), 2, fast_cfg)
        assert vbar == pytest.approx(vzr, abs=1e-4)


class TestEB:
    def test_high_rate_approaches_zero_rate_quantity(self, bsc01, ml01, uniform2,
                                                     fast_cfg):
        v = e_b(2.0, uniform2, bsc01, ml01, fast_cfg)
        # with the coupling unconstrained the best split is deterministic
        # clusters; the bound reaches zero there
        assert v <= e_bar_zero(uniform2, bsc01, ml01, fast_cfg) + 1e-9

    def test_exceeds_straight_line_at_low_rate(self, bsc01, ml01, uniform2, fast_cfg):
        curve, tp = straight_line_bound(bsc01, ml01, R_GRID, fast_cfg)
        found = False
        for (R, esl) in curve.points:
            if e_b(R, uniform2, bsc01, ml01, fast_cfg) > esl:
                found = True
                break
        assert found

    def test_dominates_genie_with_best_kernel(self, bsc01, ml01, uniform2, fast_cfg):
        R = 0.1 * LOG2
        vb = e_b(R, uniform2, bsc01, ml01, fast_cfg)
        best = math.inf
        for a in np.linspace(0.0, 1.0, 9):
            wyz = broadcast_alpha(AlphaFamily(alpha=float(a), base=bsc01))
            best = min(best, genie_bound(R, uniform2, wyz, ml01, fast_cfg).value)
        assert vb >= best - 1e-3


class TestESym:
    def test_upper_bounds_genie(self, bsc01, ml01, uniform2, fast_cfg):
        wyz = broadcast_alpha(AlphaFamily(alpha=0.5, base=bsc01))
        R = 0.15 * LOG2
        ev = genie_bound(R, uniform2, wyz, ml01, fast_cfg)
        assert e_sym(R, uniform2, wyz, ml01, fast_cfg) >= ev.value - 1e-6

    def test_matches_bsc_closed_form(self, bsc01, ml01, uniform2, fast_cfg):
        alpha = 0.5
        wyz = broadcast_alpha(AlphaFamily(alpha=alpha, base=bsc01))
        wzxy = alpha * np.eye(2)[None, :, :] + (1 - alpha) * 0.5
        wzxy = np.repeat(wzxy, 2, axis=0)
        R = 0.12 * LOG2
        curve = bsc_genie_bound([R], 0.1, [("a", wzxy)], fast_cfg)
        assert e_sym(R, uniform2, wyz, ml01, fast_cfg) == pytest.approx(
            curve.points[0][1], abs=1e-6)


class TestBscGenieBound:
    def test_identity_family_below_esp(self, bsc01, fast_cfg):
        wzxy = np.zeros((2, 2, 2))
        for x in range(2):
            for y in range(2):
                wzxy[x, y, y] = 1.0
        curve = bsc_genie_bound(R_GRID, 0.1, [("zy", wzxy)], fast_cfg)
        for (R, E) in curve.points:
            assert E <= bsc_esp_oracle(R, 0.1) + 1e-6

    def test_strict_improvement_over_straight_line(self, bsc01, ml01, fast_cfg):
        fam = default_wz_family(bsc01, alpha_points=9, grid_points=5)
        curve = bsc_genie_bound(R_GRID, 0.1, fam, fast_cfg)
        slc, tp = straight_line_bound(bsc01, ml01, R_GRID, fast_cfg)
        margins = [esl - e61 for (R, e61), (_, esl) in zip(curve.points, slc.points)
                   if R < tp.R_star]
        assert max(margins) > 0.0

    def test_gamma_half_when_unconstrained(self, bsc01, fast_cfg):
        # R above log 2: the constraint is slack and gamma = 1/2 is allowed
        wzxy = np.full((2, 2, 2), 0.5)
        curve = bsc_genie_bound([0.8], 0.1, [("flat", wzxy)], fast_cfg)
        # independent Z: divergence at gamma = 1/2 is zero, distances vanish
        assert curve.points[0][1] == pytest.approx(0.255413, abs=1e-6)

    def test_empty_family_rejected(self, fast_cfg):
        with pytest.raises(ValidationError):
            bsc_genie_bound([0.1], 0.1, [], fast_cfg)


class TestEOrth:
    def test_sandwich_at_selected_rates(self, bsc01, ml01, uniform2, fast_cfg):
        for Rb in (0.06, 0.2, 0.38):
            R = Rb * LOG2
            ck = e_ck(R, uniform2, bsc01, ml01, fast_cfg)
            orth = e_orth(R, uniform2, bsc01, ml01, fast_cfg)
            assert ck <= orth + 1e-3
            for a in (0.3, 0.7, 1.0):
                wyz = broadcast_alpha(AlphaFamily(alpha=a, base=bsc01))
                ev = genie_bound(R, uniform2, wyz, ml01, fast_cfg)
                assert orth <= ev.value + 1e-3

    def test_vanishes_above_capacity(self, bsc01, ml01, uniform2, fast_cfg):
        R = capacity(uniform2, bsc01) + 0.3
        assert e_orth(R, uniform2, bsc01, ml01, fast_cfg) == pytest.approx(
            0.0, abs=1e-6)


class TestReportedCurveOrdering:
    def test_search_curve_below_all_upper_bounds(self, bsc01, ml01, uniform2, fast_cfg):
        # best-over-family genie curve sits below sphere packing, the
        # straight line, and the simpler E_B form
        rates = np.array([0.05, 0.1, 0.3, 0.45]) * LOG2
        slc, _ = straight_line_bound(bsc01, ml01, rates, fast_cfg)
        vals = np.full(rates.size, math.inf)
        for a in np.linspace(0.0, 1.0, 9):
            wyz = broadcast_alpha(AlphaFamily(alpha=float(a), base=bsc01))
            evs = genie_curve(rates, uniform2, wyz, ml01, fast_cfg)
            vals = np.minimum(vals, [ev.value for ev in evs])
        for v, (R, esl) in zip(vals, slc.points):
            cap = min(e_sp(R, uniform2, bsc01, fast_cfg), esl,
                      e_b(R, uniform2, bsc01, ml01, fast_cfg))
            assert v <= cap + 1e-6

    def test_general_alphabet_machinery_coheres(self, fast_cfg):
        # |X| = 3: the coordinate-ascent aux value never exceeds the
        # symmetric-polytope relaxation at the same joint
        rng = np.random.default_rng(40)
        raw = rng.dirichlet(np.ones(2), size=3) + 0.1
        w = ChannelKernel(raw / raw.sum(axis=1, keepdims=True))
        q = ml_metric(w)
        wzxy = rng.dirichlet(np.ones(2), size=(3, 2)) * 0.8 + 0.1
        wzxy = wzxy / wzxy.sum(axis=2, keepdims=True)
        wyz = BroadcastKernel(weights=w.rows[:, :, None] * wzxy, base=w)
        pxz = rng.dirichlet(np.ones(6)).reshape(3, 2)
        cfg = OptimizerConfig(restarts=2, rng_seed=fast_cfg.rng_seed)
        ev = genie_bound_fixed(pxz, wyz, q, cfg, check_primal=False)
        from relbounds.genie import _sym_polytope_max, _z_divergence
        wyxz, _ = wyz.y_given_xz()
        relaxed = (_z_divergence(pxz, wyz.z_given_x(), pxz.sum(axis=1))
                   + _sym_polytope_max(pxz, wyxz, q, cfg))
        assert ev.value <= relaxed + 1e-6


class TestAlphaFamilyEndpoints:
    def test_alpha_zero_flat_equals_zero_rate_quantity(self, bsc01, ml01, uniform2,
                                                       fast_cfg, wyz_independent):
        target = e_bar_zero(uniform2, bsc01, ml01, fast_cfg)
        for Rb in (0.05, 0.2, 0.45):
            ev = genie_bound(Rb * LOG2, uniform2, wyz_independent, ml01, fast_cfg)
            assert ev.value == pytest.approx(target, abs=1e-4)

    def test_alpha_one_reduces_to_esp(self, bsc01, ml01, uniform2, fast_cfg,
                                      wyz_identity):
        for Rb in (0.1, 0.3):
            R = Rb * LOG2
            ev = genie_bound(R, uniform2, wyz_identity, ml01, fast_cfg)
            assert ev.value == pytest.approx(e_sp(R, uniform2, bsc01, fast_cfg),
                                             abs=1e-6)
