import numpy as np
import pytest
from hypothesis import given, strategies as st

from burstrelay import analytic
from burstrelay.detectors import SymbolPosteriors
from burstrelay.modem import BPSK, QPSK
from burstrelay.noise import NoiseParams
from burstrelay.relaying import (LinkNoise, SchemeConfig, combine_llr_bpsk, combine_map,
                                 combine_mrc, draw_channels, relay_process, relay_theta,
                                 run_frame, with_theta)

DEFAULT_NOISE = NoiseParams(0.1, 100.0, 100.0)


def _noise(snr_db, params=DEFAULT_NOISE):
    return LinkNoise.identical(params).at_snr(10 ** (snr_db / 10))


def _bits(rng, F, K, order=2):
    return rng.integers(0, 2, (F, K * (order.bit_length() - 1)))


def _post_from_llr(llr):
    llr = np.asarray(llr, dtype=float)
    return SymbolPosteriors(np.stack([-np.logaddexp(0, -llr), -np.logaddexp(0, llr)], -1))


class TestSchemeConfig:
    @pytest.mark.parametrize("kw", [dict(protocol="AF"), dict(receiver="ML"), dict(order=8),
                                    dict(relay_error_knowledge="psychic"),
                                    dict(sdfr_mode="oracle"), dict(gamma_t=-1.0),
                                    dict(p_s=0.0)])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            SchemeConfig(**kw)

    def test_energy_parity(self):
        dt, coop = SchemeConfig("DT"), SchemeConfig("SR")
        assert dt.source_power == coop.p_s + coop.p_m == 1.0

    @pytest.mark.parametrize("cfg, name", [
        (SchemeConfig("DT"), "DT"),
        (SchemeConfig("SDFR"), "SDFR-genie"),
        (SchemeConfig("SDFR", sdfr_mode="threshold", gamma_t=10.0), "SDFR-t10dB"),
        (SchemeConfig("SR", relay_error_knowledge="exact", order=4), "SR+theta:exact/QPSK"),
        (SchemeConfig("SR", label="mine"), "mine"),
    ])
    def test_scheme_id(self, cfg, name):
        assert cfg.scheme_id == name


class TestCombiners:
    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_zero_theta_adds(self, a, b):
        assert combine_llr_bpsk(a, b, 0.0) == pytest.approx(a + b)

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 0.49))
    def test_antisymmetric(self, a, b, t):
        assert combine_llr_bpsk(-a, -b, t) == pytest.approx(-combine_llr_bpsk(a, b, t),
                                                            abs=1e-9)

    @given(st.floats(-50, 50), st.floats(0, 0.49))
    def test_silent_relay_branch(self, a, t):
        assert combine_llr_bpsk(a, 0.0, t) == pytest.approx(a)

    def test_half_theta_discards_relay(self):
        for t in (0.49, 0.499, 0.49999):
            v = combine_llr_bpsk(1.5, 30.0, t)
            assert abs(v - 1.5) <= 2 * abs(np.log((1 - t) / t)) + 1e-12
        assert combine_llr_bpsk(1.5, 30.0, 0.5 - 1e-12) == pytest.approx(1.5, abs=1e-9)

    def test_relay_clip(self):
        # a wrong relay symbol can shift the decision by at most ln((1-t)/t)
        t = 0.01
        v = combine_llr_bpsk(0.0, 1e3, t)
        assert v == pytest.approx(np.log((1 - t) / t), rel=1e-9)

    @given(st.lists(st.floats(-40, 40), min_size=1, max_size=20),
           st.floats(0, 0.49))
    def test_map_combiner_matches_closed_form(self, llrs, t):
        l_sd = np.array(llrs)
        l_md = l_sd[::-1] * 0.7
        got = combine_map(_post_from_llr(l_sd), _post_from_llr(l_md), t).llrs()
        np.testing.assert_allclose(got, combine_llr_bpsk(l_sd, l_md, t), atol=1e-8)

    def test_map_combiner_qpsk(self):
        rng = np.random.default_rng(0)
        lp = [np.log(rng.dirichlet(np.ones(4), 5)) for _ in range(2)]
        q = 0.2
        got = combine_map(SymbolPosteriors(lp[0], QPSK), SymbolPosteriors(lp[1], QPSK), q)
        p_md = np.exp(lp[1])
        relay = (1 - q) * p_md + q / 3 * (1 - p_md)
        expect = np.exp(lp[0]) * relay
        np.testing.assert_allclose(got.probs, expect / expect.sum(-1, keepdims=True))

    @pytest.mark.parametrize("q", [-0.1, 0.5, 0.9])
    def test_map_combiner_rejects_q(self, q):
        p = _post_from_llr([1.0])
        with pytest.raises(ValueError):
            combine_map(p, p, q)

    def test_mrc_reductions(self):
        y = np.array([0.5 + 1j, -2.0])
        np.testing.assert_allclose(combine_mrc(y, 0 * y, 2.0, 0.0, (1.0, 1.0)),
                                   2.0 * y)
        np.testing.assert_allclose(combine_mrc(y, y, 1j, 1j, (1.0, 1.0)),
                                   2 * combine_mrc(y, 0 * y, 1j, 0, (1.0, 1.0)))


class TestRelay:
    def test_noiseless_relay_decodes(self):
        rng = np.random.default_rng(1)
        noise = LinkNoise.identical(DEFAULT_NOISE.with_sigma(1e-9))
        cfg = SchemeConfig("SR", relay_error_knowledge="exact")
        idx = rng.integers(0, 2, (4, 50))
        h = np.ones(4) * (0.3 + 0.4j)
        y = np.sqrt(cfg.p_s) * h[:, None] * BPSK.constellation[idx]
        relay = relay_process(y, h, cfg, noise, true_indices=idx)
        np.testing.assert_array_equal(relay.decoded, idx)
        assert relay.theta_m_reported < 1e-6

    def test_theta_modes(self):
        noise = _noise(10.0)
        prof = analytic.LinkSnrProfile.from_link(0.5, SchemeConfig().geometry["sm"], noise.sm)
        exact = analytic.relay_ser(prof)
        assert relay_theta(SchemeConfig("SR"), noise) == 0.0
        assert relay_theta(SchemeConfig("SR", relay_error_knowledge="exact"),
                           noise) == pytest.approx(exact)
        assert relay_theta(SchemeConfig("SR", relay_error_knowledge="estimated"),
                           noise) == pytest.approx(1.1 * exact)
        assert relay_theta(SchemeConfig("SDFR", relay_error_knowledge="exact"), noise) == 0.0
        with pytest.raises(ValueError):
            relay_theta(SchemeConfig("SR", relay_error_knowledge="empirical"), noise)
        emp = with_theta(SchemeConfig("SR", relay_error_knowledge="empirical"), 0.7)
        assert relay_theta(emp, noise) < 0.5

    def test_threshold_theta_is_conditional(self):
        noise = _noise(10.0)
        cfg = SchemeConfig("SDFR", sdfr_mode="threshold", gamma_t=5.0,
                           relay_error_knowledge="exact")
        prof = analytic.LinkSnrProfile.from_link(0.5, cfg.geometry["sm"], noise.sm)
        assert relay_theta(cfg, noise) == pytest.approx(
            analytic.relay_ser_given_threshold(prof, 5.0))


def _run(cfg, noise, seed=0, F=200, K=100):
    rng = np.random.default_rng(seed)
    bits = _bits(rng, F, K, cfg.order)
    draw = draw_channels(rng, F, K, noise)
    return bits, run_frame(cfg, bits, noise, draw=draw)


class TestFrames:
    @pytest.mark.parametrize("proto", ["DT", "SR", "SDFR"])
    @pytest.mark.parametrize("receiver", ["MAP", "MEMORYLESS", "AWGN_MRC", "GENIE_MRC"])
    @pytest.mark.parametrize("order", [2, 4])
    def test_noiseless_is_error_free(self, proto, receiver, order):
        noise = LinkNoise.identical(DEFAULT_NOISE.with_sigma(1e-12))
        bits, out = _run(SchemeConfig(proto, receiver, order=order), noise, F=20, K=40)
        np.testing.assert_array_equal(out.bits(), bits)

    def test_map_equals_memoryless_without_memory(self):
        noise = _noise(8.0, NoiseParams(0.2, 1.0, 50.0))
        _, a = _run(SchemeConfig("DT", "MAP"), noise)
        _, b = _run(SchemeConfig("DT", "MEMORYLESS"), noise)
        np.testing.assert_allclose(a.llrs, b.llrs, atol=1e-8)

    def test_zero_threshold_equals_sr(self):
        noise = _noise(8.0)
        _, a = _run(SchemeConfig("SDFR", sdfr_mode="threshold", gamma_t=0.0), noise)
        _, b = _run(SchemeConfig("SR"), noise)
        np.testing.assert_allclose(a.llrs, b.llrs)
        assert a.relay.forwarded.all()

    def test_infinite_threshold_equals_dt_at_source_power(self):
        noise = _noise(8.0)
        _, a = _run(SchemeConfig("SDFR", sdfr_mode="threshold", gamma_t=np.inf), noise)
        _, b = _run(SchemeConfig("DT", p_s=0.5, p_m=0.0), noise)
        np.testing.assert_allclose(a.llrs, b.llrs, atol=1e-9)
        assert not a.relay.forwarded.any()

    def test_perfect_relay_sr_matches_genie_sdfr(self):
        base = DEFAULT_NOISE.with_sigma(0.1)
        noise = LinkNoise(base, DEFAULT_NOISE.with_sigma(1e-12), base)
        _, a = _run(SchemeConfig("SR", relay_error_knowledge="exact"), noise)
        _, b = _run(SchemeConfig("SDFR"), noise)
        np.testing.assert_array_equal(a.bits(), b.bits())
        # theta is ~1e-13 rather than 0, which nudges LLRs near the relay clip
        np.testing.assert_allclose(a.llrs, b.llrs, rtol=1e-4)

    def test_single_frame_input(self):
        noise = _noise(10.0)
        rng = np.random.default_rng(3)
        out = run_frame(SchemeConfig("SR"), rng.integers(0, 2, 64), noise, rng=rng)
        assert out.llrs.shape == (64,)

    def test_qpsk_bit_count(self):
        bits, out = _run(SchemeConfig("SDFR", order=4), _noise(10.0), F=5, K=30)
        assert out.llrs.shape == bits.shape == (5, 60)


class TestStatistical:
    def _ber(self, cfg, snr_db, seed, F=4000, K=250):
        bits, out = _run(cfg, _noise(snr_db), seed, F, K)
        return np.mean(out.bits() != bits)

    def test_theta_knowledge_helps(self):
        # relay SER is about 0.1 here
        noise = _noise(2.0)
        prof = analytic.LinkSnrProfile.from_link(0.5, SchemeConfig().geometry["sm"], noise.sm)
        assert 0.07 < analytic.relay_ser(prof) < 0.13
        a = self._ber(SchemeConfig("SR", relay_error_knowledge="exact"), 2.0, 5)
        b = self._ber(SchemeConfig("SR"), 2.0, 5)
        assert a < b

    def test_genie_sdfr_beats_dt(self):
        for snr in (5.0, 15.0):
            assert self._ber(SchemeConfig("SDFR"), snr, 6, F=2000) < self._ber(
                SchemeConfig("DT"), snr, 6, F=2000)

    def test_forwarded_relay_error_decreases_with_threshold(self):
        noise = _noise(6.0)
        rng = np.random.default_rng(7)
        F, K = 20_000, 50
        idx = rng.integers(0, 2, (F, K))
        draw = draw_channels(rng, F, K, noise)
        cfg = SchemeConfig("SDFR", sdfr_mode="threshold")
        h = draw.fading("sm", cfg.geometry["sm"])
        y = np.sqrt(cfg.p_s) * h[:, None] * BPSK.constellation[idx] + draw.link_noise(
            "sm", noise.sm)
        rates = []
        for t in (0.0, 1.0, 3.0, 10.0):
            r = relay_process(y, h, SchemeConfig("SDFR", sdfr_mode="threshold", gamma_t=t),
                              noise)
            rates.append(np.mean((r.decoded != idx)[r.forwarded]))
        assert np.all(np.diff(rates) < 0)
