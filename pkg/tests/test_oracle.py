import math

import numpy as np
import pytest

from relbounds import (
    ChannelKernel,
    Codebook,
    DecodingMetric,
    ProbVec,
    ValidationError,
    e_sp,
    exact_pe,
    finite_exponent,
    ml_metric,
    monte_carlo_pe,
    random_cc_code,
)
from relbounds.oracle import type_class_size

REP9 = np.array([[0] * 9, [1] * 9])
REP9_PE = sum(math.comb(9, k) * 0.1 ** k * 0.9 ** (9 - k) for k in range(5, 10))


class TestCodebook:
    def test_word_length_enforced(self):
        with pytest.raises(ValidationError):
            Codebook(n=4, words=np.array([[0, 1, 0]]))

    def test_composition_enforced(self):
        comp = ProbVec(np.array([0.5, 0.5]))
        Codebook(n=4, words=np.array([[0, 0, 1, 1]]), composition=comp)
        with pytest.raises(ValidationError):
            Codebook(n=4, words=np.array([[0, 1, 1, 1]]), composition=comp)

    def test_rate(self):
        cb = Codebook(n=10, words=np.zeros((4, 10), dtype=int))
        assert cb.rate == pytest.approx(math.log(4) / 10)


class TestExactPe:
    def test_single_codeword_never_errs(self, bsc01, ml01):
        cb = Codebook(n=3, words=np.array([[0, 1, 0]]))
        res = exact_pe(cb, bsc01, ml01)
        assert res.pe == 0.0
        assert math.isinf(res.exponent)

    def test_identical_codewords_always_tie(self, bsc01, ml01):
        cb = Codebook(n=3, words=np.array([[0, 1, 0], [0, 1, 0]]))
        assert exact_pe(cb, bsc01, ml01).pe == pytest.approx(0.5, abs=1e-12)

    def test_repetition_pair_binomial_tail(self, bsc01, ml01):
        res = exact_pe(Codebook(n=9, words=REP9), bsc01, ml01)
        assert abs(res.pe - REP9_PE) / REP9_PE <= 1e-12

    def test_exponent_value(self, bsc01, ml01):
        res = exact_pe(Codebook(n=9, words=REP9), bsc01, ml01)
        assert res.exponent == pytest.approx(-math.log(REP9_PE) / 9, abs=1e-12)
        assert res.exponent == pytest.approx(0.78036, abs=1e-4)

    def test_enumeration_cap(self, bsc01, ml01):
        cb = Codebook(n=9, words=REP9)
        with pytest.raises(ValidationError):
            exact_pe(cb, bsc01, ml01, enumeration_cap=100)

    def test_exponent_decreases_with_noise(self, ml01):
        cb = Codebook(n=9, words=REP9)
        w1 = ChannelKernel.bsc(0.1)
        w2 = ChannelKernel.bsc(0.2)
        e1 = finite_exponent(cb, w1, ml_metric(w1))
        e2 = finite_exponent(cb, w2, ml_metric(w2))
        assert e2 < e1

    def test_metric_invariance_under_affine_shift(self, bsc01, ml01):
        # q -> a q + c(y) leaves every argmax set unchanged
        rng = np.random.default_rng(9)
        for _ in range(10):
            words = rng.integers(0, 2, size=(3, 5))
            cb = Codebook(n=5, words=words)
            base = exact_pe(cb, bsc01, ml01).pe
            a = float(rng.uniform(0.5, 3.0))
            c = rng.normal(size=2)
            shifted = DecodingMetric(a * ml01.scores + c[None, :])
            assert exact_pe(cb, bsc01, shifted).pe == pytest.approx(base, abs=1e-12)

    def test_ml_is_optimal_among_metrics(self, bsc01, ml01):
        rng = np.random.default_rng(21)
        words = np.array([[0, 0, 1], [1, 1, 0], [0, 1, 1], [1, 0, 0]])
        cb = Codebook(n=3, words=words)
        ml_pe = exact_pe(cb, bsc01, ml01).pe
        for _ in range(20):
            q = DecodingMetric(rng.normal(size=(2, 2)))
            assert exact_pe(cb, bsc01, q).pe >= ml_pe - 1e-12


class TestMonteCarlo:
    def test_within_three_sigma_of_exact(self, bsc01, ml01):
        cb = Codebook(n=9, words=REP9)
        res = monte_carlo_pe(cb, bsc01, ml01, trials=10 ** 6, seed=2024)
        assert abs(res.pe - REP9_PE) <= 3.0 * res.std_error

    def test_batch_means_within_four_sigma(self, bsc01, ml01):
        cb = Codebook(n=9, words=REP9)
        estimates = []
        for seed in range(30):
            r = monte_carlo_pe(cb, bsc01, ml01, trials=20_000, seed=seed)
            estimates.append(r.pe)
        mean = float(np.mean(estimates))
        sigma = float(np.std(estimates, ddof=1)) / math.sqrt(len(estimates))
        assert abs(mean - REP9_PE) <= 4.0 * sigma

    def test_zero_error_code(self, ml01):
        w = ChannelKernel(np.eye(2))
        cb = Codebook(n=2, words=np.array([[0, 0], [1, 1]]))
        res = monte_carlo_pe(cb, w, ml_metric(w), trials=2000, seed=5)
        assert res.pe == 0.0

    def test_deterministic_given_seed(self, bsc01, ml01):
        cb = Codebook(n=9, words=REP9)
        a = monte_carlo_pe(cb, bsc01, ml01, trials=50_000, seed=77)
        b = monte_carlo_pe(cb, bsc01, ml01, trials=50_000, seed=77)
        assert a.pe == b.pe and a.std_error == b.std_error


class TestRandomCcCode:
    def test_composition_and_distinctness(self):
        cb = random_cc_code(ProbVec(np.array([0.5, 0.5])), 4, 6, seed=3)
        assert cb.size == 6
        assert np.all(cb.words.sum(axis=1) == 2)
        assert len({tuple(w) for w in cb.words}) == 6

    def test_seed_determinism(self):
        a = random_cc_code(ProbVec(np.array([0.5, 0.5])), 8, 5, seed=11)
        b = random_cc_code(ProbVec(np.array([0.5, 0.5])), 8, 5, seed=11)
        assert np.array_equal(a.words, b.words)

    def test_infeasible_composition(self):
        with pytest.raises(ValidationError):
            random_cc_code(ProbVec(np.array([0.5, 0.5])), 5, 2, seed=0)

    def test_m_too_large(self):
        with pytest.raises(ValidationError):
            random_cc_code(ProbVec(np.array([0.5, 0.5])), 4, 7, seed=0)
        assert type_class_size(np.array([2, 2])) == 6

    def test_anchors_below_esp_plus_type_slack(self, bsc01, ml01, uniform2, fast_cfg):
        n, M = 10, 4
        slack = 2 * 2 * math.log(n + 1) / n
        sp = e_sp(math.log(M) / n, uniform2, bsc01, fast_cfg)
        best = -math.inf
        for seed in range(200):
            cb = random_cc_code(uniform2, n, M, seed)
            best = max(best, finite_exponent(cb, bsc01, ml01))
        assert best <= sp + slack
