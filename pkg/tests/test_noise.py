import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from burstrelay.noise import (BAD, GOOD, NoiseParams, log_pdf, sample_noise,
                              sample_state_seq, transition_probs)

valid_params = st.builds(NoiseParams,
                         p_B=st.floats(0.0, 1.0),
                         gamma=st.floats(1.0, 1e4),
                         R=st.floats(1.0, 1e4),
                         sigma_G_sq=st.floats(1e-3, 1e3))


class TestNoiseParams:
    @pytest.mark.parametrize("kw", [dict(p_B=-0.1), dict(p_B=1.1), dict(gamma=0.5),
                                    dict(R=0.9), dict(sigma_G_sq=0.0),
                                    dict(p_B=float("nan"))])
    def test_rejects_invalid(self, kw):
        base = dict(p_B=0.1, gamma=100.0, R=100.0)
        with pytest.raises(ValueError):
            NoiseParams(**{**base, **kw})

    def test_variances_and_mean_power(self):
        p = NoiseParams(0.1, 100, 100, 2.0)
        np.testing.assert_allclose(p.variances, [2.0, 200.0])
        assert p.mean_power == pytest.approx(0.9 * 2 + 0.1 * 200)

    @given(valid_params)
    def test_transition_matrix_is_stochastic(self, p):
        T = p.transition_matrix()
        assert np.all(T >= 0) and np.all(T <= 1)
        np.testing.assert_allclose(T.sum(axis=1), 1.0)


class TestTransitionProbs:
    @pytest.mark.parametrize("p_B, gamma, expected", [
        (0.1, 100, (0.001, 0.009)),
        (0.5, 1, (0.5, 0.5)),
        (0.0, 10, (0.0, 0.1)),
    ])
    def test_examples(self, p_B, gamma, expected):
        # (0.1, 100): p_GB = p_B / gamma, p_BG = (1 - p_B) / gamma
        got = transition_probs(NoiseParams(p_B, gamma, 10.0))
        np.testing.assert_allclose(got, expected, atol=1e-15)

    @given(valid_params)
    def test_defining_equations(self, p):
        p_GB, p_BG = transition_probs(p)
        assert 0 <= p_GB <= 1 and 0 <= p_BG <= 1
        assert p_GB + p_BG == pytest.approx(1 / p.gamma, rel=1e-12)
        if p_GB + p_BG > 0:
            assert p_GB / (p_GB + p_BG) == pytest.approx(p.p_B, abs=1e-12)

    @given(valid_params, st.integers(1, 50))
    def test_stationary_distribution_is_invariant(self, p, k):
        T = p.transition_matrix()
        pi_k = p.stationary @ np.linalg.matrix_power(T, k)
        np.testing.assert_allclose(pi_k, p.stationary, atol=1e-12)


class TestSampleStateSeq:
    @pytest.mark.parametrize("p_B, state", [(0.0, GOOD), (1.0, BAD)])
    def test_degenerate_chains(self, p_B, state):
        rng = np.random.default_rng(0)
        s = sample_state_seq(NoiseParams(p_B, 7.0, 10.0), 10, rng)
        assert s.shape == (10,) and np.all(s == state)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_state_seq(NoiseParams(0.1, 10, 10), 0, np.random.default_rng(0))

    def test_occupancy(self):
        p, K = NoiseParams(0.1, 100.0, 100.0), 10 ** 6
        s = sample_state_seq(p, K, np.random.default_rng(1))
        # variance of the occupancy fraction of a two-state chain with
        # lag-k autocorrelation (1 - 1/gamma)^k
        tol = 3 * np.sqrt(0.1 * 0.9 * (2 * p.gamma - 1) / K)
        assert abs(s.mean() - 0.1) < tol

    def test_bad_sojourn_time(self):
        p = NoiseParams(0.1, 100.0, 100.0)
        s = sample_state_seq(p, 2 * 10 ** 6, np.random.default_rng(2))
        edges = np.diff(np.concatenate([[0], s, [0]]).astype(int))
        runs = np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
        _, p_BG = transition_probs(p)
        # sojourn times are geometric with mean 1 / p_BG
        se = np.sqrt(1 - p_BG) / p_BG / np.sqrt(runs.size)
        assert abs(runs.mean() - 1 / p_BG) < 4 * se

    def test_memoryless_when_gamma_is_one(self):
        s = sample_state_seq(NoiseParams(0.3, 1.0, 10.0), 10 ** 6,
                             np.random.default_rng(3)).astype(float)
        rho = np.corrcoef(s[:-1], s[1:])[0, 1]
        assert abs(rho) < 4 / np.sqrt(s.size)

    def test_lag_one_correlation_matches_chain(self):
        p = NoiseParams(0.2, 20.0, 10.0)
        s = sample_state_seq(p, 20_000, np.random.default_rng(4), n_frames=50).astype(float)
        a, b = s[:, :-1].ravel(), s[:, 1:].ravel()
        assert np.corrcoef(a, b)[0, 1] == pytest.approx(1 - 1 / p.gamma, abs=0.01)

    def test_batch_rows_are_independent_chains(self):
        s = sample_state_seq(NoiseParams(0.5, 1000.0, 10.0), 5, np.random.default_rng(5),
                             n_frames=4000)
        assert s.shape == (4000, 5)
        # first states are stationary draws, independent across frames
        assert abs(s[:, 0].mean() - 0.5) < 0.05

    def test_reproducible(self):
        p = NoiseParams(0.1, 100, 100)
        a = sample_state_seq(p, 1000, np.random.default_rng(9))
        b = sample_state_seq(p, 1000, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)


class TestSampleNoise:
    @pytest.mark.parametrize("state, var", [(GOOD, 1.0), (BAD, 100.0)])
    def test_variance(self, state, var):
        p = NoiseParams(0.1, 100.0, 100.0)
        n = sample_noise(np.full(10 ** 6, state), p, np.random.default_rng(0))
        assert np.iscomplexobj(n)
        assert np.mean(np.abs(n) ** 2) == pytest.approx(var, rel=0.01)
        # circular: real and imaginary parts carry half the power each
        assert np.var(n.real) == pytest.approx(var / 2, rel=0.01)
        assert abs(np.mean(n.real * n.imag)) < 0.01 * var

    def test_equal_variances_when_R_is_one(self):
        p = NoiseParams(0.5, 10.0, 1.0)
        rng = np.random.default_rng(1)
        g = sample_noise(np.zeros(200_000, int), p, rng)
        b = sample_noise(np.ones(200_000, int), p, rng)
        ratio = np.mean(np.abs(b) ** 2) / np.mean(np.abs(g) ** 2)
        # each power estimate is a mean of unit exponentials: relative sd 1/sqrt(N)
        assert abs(ratio - 1) < 4 * np.sqrt(2 / 200_000)


class TestLogPdf:
    @pytest.mark.parametrize("x, state, expected", [
        (0, "G", np.log(1 / np.pi)),
        (0, "B", np.log(1 / (100 * np.pi))),
        (1 + 0j, "G", np.log(1 / np.pi) - 1),
        (1 + 0j, GOOD, np.log(1 / np.pi) - 1),
    ])
    def test_examples(self, x, state, expected):
        assert log_pdf(x, state, NoiseParams(0.1, 100, 100)) == pytest.approx(expected)

    @pytest.mark.parametrize("state", [GOOD, BAD])
    def test_integrates_to_one(self, state):
        p = NoiseParams(0.1, 10.0, 20.0, 0.5)
        # radial integral of the circular density over the plane
        f = lambda r: 2 * np.pi * r * np.exp(log_pdf(r, state, p))
        total, _ = integrate.quad(f, 0, np.inf)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_finite_for_large_arguments(self):
        v = log_pdf(np.array([1e6 + 1e6j]), BAD, NoiseParams(0.1, 10, 1e4, 1e-3))
        assert np.all(np.isfinite(v))
