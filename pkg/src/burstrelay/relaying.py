"""Direct transmission and decode-and-forward relaying, frame by frame.

All frame functions operate on a batch of ``F`` frames at once: ``bits`` has
shape ``(F, L)`` (a 1-D array is treated as one frame) and every link gets one
block-fading coefficient per frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import analytic
from .channel import LinkGeometry
from .detectors import (SymbolPosteriors, awgn_detect, genie_detect, map_detect,
                        memoryless_detect)
from .modem import Modulation, bits_to_indices, get_modulation
from .noise import NoiseParams, sample_state_seq

PROTOCOLS = ("DT", "SR", "SDFR")
RECEIVERS = ("MAP", "MEMORYLESS", "AWGN_MRC", "GENIE_MRC")
KNOWLEDGE = ("none", "exact", "estimated", "empirical")
LINKS = ("sd", "sm", "md")


@dataclass(frozen=True)
class SchemeConfig:
    """One transmission scheme.

    ``gamma_t`` is the linear SNR threshold of threshold-based SDFR;
    ``sdfr_mode="genie"`` instead forwards exactly the correctly decoded
    symbols. ``theta_value`` pins the relay error probability used by the
    destination (set by the harness for ``relay_error_knowledge="empirical"``).
    """

    protocol: str = "DT"
    receiver: str = "MAP"
    order: int = 2
    lam_sd: float = 1.0
    lam_sm: float = 0.4
    lam_md: float = 0.6
    eta: float = 2.0
    p_s: float = 0.5
    p_m: float = 0.5
    relay_error_knowledge: str = "none"
    theta_error_factor: float = 1.1
    theta_value: float | None = None
    sdfr_mode: str = "genie"
    gamma_t: float = 0.0
    threshold_ref: str = "good"
    awgn_variance: str = "average"
    label: str | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.receiver not in RECEIVERS:
            raise ValueError(f"unknown receiver {self.receiver!r}")
        if self.relay_error_knowledge not in KNOWLEDGE:
            raise ValueError(f"unknown relay error knowledge {self.relay_error_knowledge!r}")
        if self.sdfr_mode not in ("genie", "threshold"):
            raise ValueError(f"unknown SDFR mode {self.sdfr_mode!r}")
        if self.threshold_ref not in ("good", "average"):
            raise ValueError(f"unknown threshold reference {self.threshold_ref!r}")
        if self.awgn_variance not in ("good", "average"):
            raise ValueError(f"unknown AWGN variance choice {self.awgn_variance!r}")
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order}")
        if self.p_s <= 0 or self.p_m < 0:
            raise ValueError("transmit powers must be positive")
        if self.gamma_t < 0:
            raise ValueError("threshold must be nonnegative")

    @property
    def total_power(self) -> float:
        return self.p_s + self.p_m

    @property
    def mod(self) -> Modulation:
        return get_modulation(self.order)

    @property
    def geometry(self) -> dict[str, LinkGeometry]:
        return {"sd": LinkGeometry(self.lam_sd, self.eta),
                "sm": LinkGeometry(self.lam_sm, self.eta),
                "md": LinkGeometry(self.lam_md, self.eta)}

    @property
    def source_power(self) -> float:
        """DT puts the whole budget on the source."""
        return self.total_power if self.protocol == "DT" else self.p_s

    @property
    def scheme_id(self) -> str:
        if self.label:
            return self.label
        name = self.protocol
        if self.protocol == "SDFR":
            name += ("-genie" if self.sdfr_mode == "genie"
                     else f"-t{10 * np.log10(self.gamma_t):.4g}dB" if self.gamma_t > 0
                     else "-t0")
        if self.protocol != "DT" and self.relay_error_knowledge != "none":
            name += f"+theta:{self.relay_error_knowledge}"
        if self.order == 4:
            name += "/QPSK"
        return name


@dataclass(frozen=True)
class LinkNoise:
    """Noise parameters of the three links."""

    sd: NoiseParams
    sm: NoiseParams
    md: NoiseParams

    @classmethod
    def identical(cls, params: NoiseParams) -> "LinkNoise":
        return cls(params, params, params)

    def at_snr(self, snr_linear: float) -> "LinkNoise":
        """Set ``sigma_G^2 = E|x|^2 / SNR`` (unit symbol energy) on every link."""
        s = 1.0 / snr_linear
        return LinkNoise(self.sd.with_sigma(s), self.sm.with_sigma(s), self.md.with_sigma(s))

    def __getitem__(self, link: str) -> NoiseParams:
        return getattr(self, link)


@dataclass
class ChannelDraw:
    """Standardized randomness for the three links of ``F`` frames.

    ``h`` holds unit-variance fading, ``noise`` unit-variance complex
    Gaussians; the schemes scale them by path loss and state variances, so
    different schemes can share one draw.
    """

    h: dict[str, np.ndarray]
    states: dict[str, np.ndarray]
    noise: dict[str, np.ndarray]

    @property
    def n_frames(self) -> int:
        return self.h["sd"].shape[0]

    def fading(self, link: str, geom: LinkGeometry) -> np.ndarray:
        return np.sqrt(geom.omega) * self.h[link]

    def link_noise(self, link: str, params: NoiseParams) -> np.ndarray:
        return np.sqrt(params.variances[self.states[link]]) * self.noise[link]


def draw_channels(rng: np.random.Generator, n_frames: int, K: int,
                  noise: LinkNoise) -> ChannelDraw:
    """Draw fading, states and noise for sd, sm, md in a fixed order."""
    h, states, z = {}, {}, {}
    for link in LINKS:
        g = rng.standard_normal((n_frames, 2))
        h[link] = (g[:, 0] + 1j * g[:, 1]) / np.sqrt(2.0)
        states[link] = sample_state_seq(noise[link], K, rng, n_frames=n_frames)
        w = rng.standard_normal((n_frames, K, 2))
        z[link] = (w[..., 0] + 1j * w[..., 1]) / np.sqrt(2.0)
    return ChannelDraw(h, states, z)


@dataclass
class RelayDecision:
    """What the relay does with one batch of frames.

    ``forwarded`` is per frame, or per symbol for the genie SDFR relay.
    """

    forwarded: np.ndarray
    decoded: np.ndarray
    theta_m_reported: float


@dataclass
class LlrFrame:
    llrs: np.ndarray
    relay: RelayDecision | None = None

    def bits(self) -> np.ndarray:
        return (self.llrs < 0).astype(np.int8)


def detect_branch(receiver: str, y, h, power: float, params: NoiseParams,
                  mod: Modulation, states=None, active=None,
                  awgn_variance: str = "average") -> SymbolPosteriors:
    """Per-link soft detection for the configured receiver type."""
    if receiver == "MAP":
        return map_detect(y, h, power, params, mod, active=active)
    if receiver == "MEMORYLESS":
        return memoryless_detect(y, h, power, params, mod, active=active)
    if receiver == "AWGN_MRC":
        var = params.mean_power if awgn_variance == "average" else params.sigma_G_sq
        return awgn_detect(y, h, power, var, mod, active=active)
    if receiver == "GENIE_MRC":
        if states is None:
            raise ValueError("the genie receiver needs the true noise states")
        return genie_detect(y, h, power, states, params, mod, active=active)
    raise ValueError(f"unknown receiver {receiver!r}")


def combine_llr_bpsk(l_sd, l_md, theta: float):
    """Cooperative BPSK LLR with a relay bit error probability ``theta``.

    ``L_sd + L_md + ln[(1 + r e^{-L_md}) / (1 + r e^{L_md})]`` with
    ``r = theta / (1 - theta)``, evaluated with ``logaddexp``.
    """
    if not 0.0 <= theta < 0.5:
        raise ValueError(f"theta must lie in [0, 0.5), got {theta}")
    l_sd, l_md = np.asarray(l_sd, dtype=float), np.asarray(l_md, dtype=float)
    with np.errstate(divide="ignore"):
        log_r = np.log(theta) - np.log1p(-theta)
    return (l_sd + l_md + np.logaddexp(0.0, log_r - l_md)
            - np.logaddexp(0.0, log_r + l_md))


def combine_map(post_sd: SymbolPosteriors, post_md: SymbolPosteriors, q_m: float,
                mod: Modulation | None = None) -> SymbolPosteriors:
    """Combine direct and relayed posteriors given the relay SER ``q_m``.

    The relay is modelled as sending the source symbol with probability
    ``1 - q_m`` and each of the ``M - 1`` other symbols with probability
    ``q_m / (M - 1)``. ``q_m = 0`` multiplies the two posteriors.
    """
    mod = mod or post_sd.mod
    M = mod.order
    if not 0.0 <= q_m < 1.0 - 1.0 / M:
        raise ValueError(f"q_m must lie in [0, {1 - 1 / M}), got {q_m}")
    lp_sd, lp_md = post_sd.log_probs, post_md.log_probs
    if lp_sd.shape != lp_md.shape:
        raise ValueError("posterior frames differ in shape")
    if q_m == 0.0:
        relay_term = lp_md
    else:
        # log of the total posterior mass on the other M-1 symbols
        others = np.empty_like(lp_md)
        for m in range(M):
            rest = np.delete(lp_md, m, axis=-1)
            others[..., m] = np.logaddexp.reduce(rest, axis=-1)
        relay_term = np.logaddexp(np.log1p(-q_m) + lp_md,
                                  np.log(q_m / (M - 1)) + others)
    logp = lp_sd + relay_term
    logp = logp - np.logaddexp.reduce(logp, axis=-1, keepdims=True)
    return SymbolPosteriors(logp, mod)


def combine_mrc(y_sd, y_md, h_sd, h_md, powers, noise_vars=None):
    """MRC decision statistic ``sqrt(P_s) h_sd^* y_sd + sqrt(P_m) h_md^* y_md``.

    With ``noise_vars = (v_sd, v_md)`` each branch is divided by its noise
    variance first (scalars or per-symbol arrays), which is the optimal
    combiner when the variances are known.
    """
    p_s, p_m = powers
    h_sd = np.asarray(h_sd)
    h_md = np.asarray(h_md)
    if np.ndim(y_sd) == 2:
        h_sd, h_md = h_sd[..., None], h_md[..., None]
    a = np.sqrt(p_s) * np.conj(h_sd) * np.asarray(y_sd)
    b = np.sqrt(p_m) * np.conj(h_md) * np.asarray(y_md)
    if noise_vars is not None:
        a = a / noise_vars[0]
        b = b / noise_vars[1]
    return a + b


def _batch_bits(bits, mod):
    bits = np.asarray(bits)
    single = bits.ndim == 1
    bits = np.atleast_2d(bits)
    return bits, bits_to_indices(bits, mod), single


def _finish_llrs(post: SymbolPosteriors, single: bool, relay=None) -> LlrFrame:
    llrs = post.llrs()
    if llrs.ndim == 1:
        llrs = llrs[None]
    return LlrFrame(llrs[0] if single else llrs, relay)


def run_dt_frame(config: SchemeConfig, bits, noise: LinkNoise,
                 rng: np.random.Generator | None = None,
                 draw: ChannelDraw | None = None) -> LlrFrame:
    """Source-to-destination transmission at full power ``P_T``."""
    mod = config.mod
    bits, idx, single = _batch_bits(bits, mod)
    F, K = idx.shape
    if draw is None:
        draw = draw_channels(rng, F, K, noise)
    geom = config.geometry["sd"]
    h = draw.fading("sd", geom)
    power = config.total_power
    y = np.sqrt(power) * h[:, None] * mod.constellation[idx] + draw.link_noise("sd", noise.sd)
    post = detect_branch(config.receiver, y, h, power, noise.sd, mod,
                         states=draw.states["sd"], awgn_variance=config.awgn_variance)
    return _finish_llrs(post, single)


def _profile(config: SchemeConfig, link: str, noise: LinkNoise):
    power = config.p_m if link == "md" else config.p_s
    return analytic.LinkSnrProfile.from_link(power, config.geometry[link], noise[link])


def relay_theta(config: SchemeConfig, noise: LinkNoise) -> float:
    """Relay symbol error probability the destination is told about."""
    if config.relay_error_knowledge == "none":
        return 0.0
    if config.theta_value is not None:
        theta = config.theta_value
    elif config.relay_error_knowledge == "empirical":
        raise ValueError("empirical relay error knowledge needs a calibrated theta_value")
    else:
        prof = _profile(config, "sm", noise)
        if config.protocol == "SDFR" and config.sdfr_mode == "genie":
            theta = 0.0
        elif config.protocol == "SDFR":
            theta = analytic.relay_ser_given_threshold(
                prof, config.gamma_t, config.order, config.threshold_ref)
        else:
            theta = analytic.relay_ser(prof, config.order)
        if config.relay_error_knowledge == "estimated":
            theta *= config.theta_error_factor
    # keep strictly inside the combiner's domain
    return float(min(theta, (1.0 - 1.0 / config.order) * (1 - 1e-9)))


def _cached(cache, key, compute):
    if cache is None:
        return compute()
    if key not in cache:
        cache[key] = compute()
    return cache[key]


def relay_process(y_sm, h_sm, config: SchemeConfig, noise: LinkNoise,
                  true_indices=None, cache: dict | None = None) -> RelayDecision:
    """Detect and hard-decide at the relay, then decide what to forward.

    SR always forwards. Threshold SDFR forwards a frame when
    ``P_s |h_sm|^2 / sigma_ref^2`` exceeds ``gamma_t``. Genie SDFR forwards
    exactly the symbols whose decision matches ``true_indices``.
    ``cache`` lets schemes that share a channel draw reuse the relay decisions.
    """
    mod = config.mod
    y_sm = np.atleast_2d(y_sm)
    h_sm = np.atleast_1d(h_sm)
    decoded = _cached(cache, ("relay", config.p_s, config.order, config.lam_sm, config.eta),
                      lambda: map_detect(y_sm, h_sm, config.p_s, noise.sm, mod).decisions())
    F = y_sm.shape[0]
    if config.protocol == "SR":
        forwarded = np.ones(F, dtype=bool)
    elif config.sdfr_mode == "genie":
        if true_indices is None:
            raise ValueError("genie SDFR needs the source symbols")
        forwarded = decoded == np.atleast_2d(true_indices)
    else:
        ref_var = noise.sm.sigma_G_sq if config.threshold_ref == "good" else noise.sm.mean_power
        snr = config.p_s * np.abs(h_sm) ** 2 / ref_var
        forwarded = snr > config.gamma_t
    return RelayDecision(forwarded, decoded, relay_theta(config, noise))


def run_cooperative_frame(config: SchemeConfig, bits, noise: LinkNoise,
                          rng: np.random.Generator | None = None,
                          draw: ChannelDraw | None = None,
                          cache: dict | None = None) -> LlrFrame:
    """Two-slot decode-and-forward transmission and destination combining.

    ``cache`` (only valid together with one shared ``draw``) memoizes the
    relay decisions and the direct-link posteriors across schemes.
    """
    if config.protocol not in ("SR", "SDFR"):
        raise ValueError("cooperative frames need protocol SR or SDFR")
    mod = config.mod
    bits, idx, single = _batch_bits(bits, mod)
    F, K = idx.shape
    if draw is None:
        draw = draw_channels(rng, F, K, noise)
    geom = config.geometry
    x = mod.constellation[idx]
    h = {link: draw.fading(link, geom[link]) for link in LINKS}

    # slot 1: source broadcast
    y_sd = np.sqrt(config.p_s) * h["sd"][:, None] * x + draw.link_noise("sd", noise.sd)
    y_sm = np.sqrt(config.p_s) * h["sm"][:, None] * x + draw.link_noise("sm", noise.sm)
    relay = relay_process(y_sm, h["sm"], config, noise, true_indices=idx, cache=cache)

    # slot 2: relay re-modulates its decisions; silent symbols carry nothing
    active = np.broadcast_to(relay.forwarded if relay.forwarded.ndim == 2
                             else relay.forwarded[:, None], (F, K))
    x_m = mod.constellation[relay.decoded] * active
    y_md = np.sqrt(config.p_m) * h["md"][:, None] * x_m + draw.link_noise("md", noise.md)

    common = dict(mod=mod, awgn_variance=config.awgn_variance)
    post_sd = _cached(
        cache, ("sd", config.receiver, config.awgn_variance, config.p_s, config.order,
                config.lam_sd, config.eta),
        lambda: detect_branch(config.receiver, y_sd, h["sd"], config.p_s, noise.sd,
                              states=draw.states["sd"], **common))
    post_md = detect_branch(config.receiver, y_md, h["md"], config.p_m, noise.md,
                            states=draw.states["md"], active=active, **common)
    combined = combine_map(post_sd, post_md, relay.theta_m_reported, mod)
    return _finish_llrs(combined, single, relay)


def run_frame(config: SchemeConfig, bits, noise: LinkNoise,
              rng: np.random.Generator | None = None,
              draw: ChannelDraw | None = None, cache: dict | None = None) -> LlrFrame:
    if config.protocol == "DT":
        return run_dt_frame(config, bits, noise, rng, draw)
    return run_cooperative_frame(config, bits, noise, rng, draw, cache)


def with_theta(config: SchemeConfig, theta: float) -> SchemeConfig:
    return replace(config, theta_value=theta)
