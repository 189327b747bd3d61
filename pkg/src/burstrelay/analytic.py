"""Closed-form error rates over Rayleigh fading with two-state noise.

Every expression is a state-probability-weighted mixture of the
corresponding Gaussian-noise expression, i.e. it assumes the receiver knows
the noise state of every symbol. They are therefore lower bounds for
practical receivers and exact for the genie-state receiver.

Functions named ``*_ber`` accept ``M`` in {2, 4}. For Gray QPSK the in-phase
and quadrature bits see independent BPSK channels with half the symbol SNR
given the fading and the state, so the bit error rate is the BPSK
expression evaluated on profiles scaled by ``sin^2(pi/4) = 1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc, erfcx

from .channel import LinkGeometry
from .noise import NoiseParams

EQUAL_SNR_RTOL = 1e-6


@dataclass(frozen=True)
class LinkSnrProfile:
    """Average per-state SNRs and stationary probabilities of one link.

    ``gbar_G = P * Omega / sigma_G^2`` and ``gbar_B = gbar_G / R``.
    """

    gbar_G: float
    gbar_B: float
    p_G: float
    p_B: float

    def __post_init__(self):
        if not (self.gbar_G >= 0 and self.gbar_B >= 0):
            raise ValueError("average SNRs must be nonnegative")
        if abs(self.p_G + self.p_B - 1.0) > 1e-12:
            raise ValueError("state probabilities must sum to 1")

    @classmethod
    def from_link(cls, power: float, geom: LinkGeometry | float,
                  params: NoiseParams) -> "LinkSnrProfile":
        omega = geom.omega if isinstance(geom, LinkGeometry) else float(geom)
        g = power * omega / params.sigma_G_sq
        return cls(g, g / params.R, params.p_G, params.p_B)

    @property
    def R(self) -> float:
        return self.gbar_G / self.gbar_B

    @property
    def gbars(self) -> np.ndarray:
        return np.array([self.gbar_G, self.gbar_B])

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.p_G, self.p_B])

    def scaled(self, factor: float) -> "LinkSnrProfile":
        return LinkSnrProfile(self.gbar_G * factor, self.gbar_B * factor,
                              self.p_G, self.p_B)


def psi(gbar):
    """Rayleigh BPSK kernel ``1 - sqrt(gbar / (1 + gbar))``."""
    gbar = np.asarray(gbar, dtype=float)
    # 1 - sqrt(g/(1+g)) = 1 / ((1+g) (1 + sqrt(g/(1+g)))) without cancellation
    return 1.0 / ((1.0 + gbar) * (1.0 + np.sqrt(gbar / (1.0 + gbar))))


def _gpsk(M: int) -> float:
    return np.sin(np.pi / M) ** 2


def _bit_profiles(M: int, *profiles: LinkSnrProfile):
    if M == 2:
        return profiles
    if M == 4:
        return tuple(p.scaled(_gpsk(4)) for p in profiles)
    raise ValueError(f"bit error rates are defined for M in (2, 4), got {M}")


def mpsk_ser_rayleigh(gbar, M: int):
    """Average M-PSK SER over Rayleigh fading with mean SNR ``gbar``."""
    g = _gpsk(M) * np.asarray(gbar, dtype=float)
    mu = np.sqrt(g / (1.0 + g))
    if M == 2:
        return 0.5 * psi(g)
    return ((M - 1) / M) * (
        1.0 - mu * (M / ((M - 1) * np.pi))
        * (np.pi / 2 + np.arctan(mu / np.tan(np.pi / M))))


def dt_ser_mpsk(profile: LinkSnrProfile, M: int = 2) -> float:
    """State-averaged M-PSK SER of a single faded link."""
    if M not in (2, 4):
        raise ValueError(f"M must be 2 or 4, got {M}")
    return float(profile.weights @ mpsk_ser_rayleigh(profile.gbars, M))


def dt_ber_bpsk(profile: LinkSnrProfile) -> float:
    """``p_G psi(gbar_G) / 2 + p_B psi(gbar_B) / 2``."""
    return float(0.5 * profile.weights @ psi(profile.gbars))


def dt_ber(profile: LinkSnrProfile, M: int = 2) -> float:
    (p,) = _bit_profiles(M, profile)
    return dt_ber_bpsk(p)


def relay_ser(profile_sm: LinkSnrProfile, M: int = 2) -> float:
    """SER of the relay's hard decisions on the source-relay link."""
    return dt_ser_mpsk(profile_sm, M)


def two_branch_mrc_ber(a, b):
    """BPSK BER of two-branch MRC over independent Rayleigh branches with
    mean SNRs ``a`` and ``b``.

    Falls back to the identical-branch closed form when the two means agree
    to within a relative ``1e-6``.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a.shape)
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    close = np.abs(hi - lo) <= EQUAL_SNR_RTOL * hi
    single = (lo == 0) & ~close
    gen = ~close & ~single
    if np.any(gen):
        x, y = a[gen], b[gen]
        out[gen] = 0.5 * (x * psi(x) - y * psi(y)) / (x - y)
    if np.any(single):
        out[single] = 0.5 * psi(hi[single])
    if np.any(close):
        g = 0.5 * (a[close] + b[close])
        mu = np.sqrt(g / (1.0 + g))
        out[close] = ((1.0 - mu) / 2.0) ** 2 * (2.0 + mu)
    return out if out.ndim else float(out)


def _pairs(profile_sd: LinkSnrProfile, profile_md: LinkSnrProfile):
    w = np.outer(profile_sd.weights, profile_md.weights)
    g_sd, g_md = np.meshgrid(profile_sd.gbars, profile_md.gbars, indexing="ij")
    return w, g_sd, g_md


def smd_ber_ner(profile_sd: LinkSnrProfile, profile_md: LinkSnrProfile,
                M: int = 2) -> float:
    """Destination BER after MRC when the relay forwarded correct data."""
    sd, md = _bit_profiles(M, profile_sd, profile_md)
    w, g_sd, g_md = _pairs(sd, md)
    return float(np.sum(w * two_branch_mrc_ber(g_sd, g_md)))


def smd_ber_er(profile_sd: LinkSnrProfile, profile_md: LinkSnrProfile,
               M: int = 2, C: float | None = None) -> float:
    """Destination error probability when the relay forwards a wrong symbol.

    Uses the high-SNR approximation ``gbar_md C / (gbar_md C + gbar_sd)``:
    an error occurs when the relay branch outweighs the direct branch.
    ``C = 1`` for BPSK and for Gray-QPSK bits. A symbol-level QPSK value
    needs an explicit ``C``.
    """
    if C is None:
        if M not in (2, 4):
            raise ValueError(f"M must be 2 or 4, got {M}")
        C = 1.0
    w, g_sd, g_md = _pairs(profile_sd, profile_md)
    den = g_md * C + g_sd
    ratio = np.divide(g_md * C, den, out=np.full(den.shape, 0.5), where=den > 0)
    return float(np.sum(w * ratio))


def relay_ber(profile_sm: LinkSnrProfile, M: int = 2) -> float:
    return dt_ber(profile_sm, M)


def sr_ber(profile_sd: LinkSnrProfile, profile_sm: LinkSnrProfile,
           profile_md: LinkSnrProfile, M: int = 2,
           p_relay: float | None = None) -> float:
    """End-to-end BER of simple relaying: ``P_m P_er + (1 - P_m) P_ner``.

    ``p_relay`` overrides the relay error probability ``P_m``.
    """
    if p_relay is None:
        p_relay = relay_ber(profile_sm, M)
    return (p_relay * smd_ber_er(profile_sd, profile_md, M)
            + (1.0 - p_relay) * smd_ber_ner(profile_sd, profile_md, M))


def sdfr_ber_lower(profile_sd: LinkSnrProfile, profile_sm: LinkSnrProfile,
                   profile_md: LinkSnrProfile, M: int = 2,
                   p_relay: float | None = None) -> float:
    """BER when the relay forwards exactly the symbols it decoded correctly.

    ``P_m P_DT + (1 - P_m) P_ner`` with ``P_m`` the relay symbol error rate.
    """
    if p_relay is None:
        p_relay = relay_ser(profile_sm, M)
    return (p_relay * dt_ber(profile_sd, M)
            + (1.0 - p_relay) * smd_ber_ner(profile_sd, profile_md, M))


def _state_thresholds(profile: LinkSnrProfile, gamma_t: float, ref: str):
    """Per-state SNR thresholds implied by one per-frame threshold.

    The relay measures ``P |h|^2 / sigma_ref^2``; ``ref="good"`` uses the
    good-state variance, ``ref="average"`` the state-averaged one.
    """
    if gamma_t < 0:
        raise ValueError(f"threshold must be >= 0, got {gamma_t}")
    if ref == "good":
        ratio = 1.0
    elif ref == "average":
        ratio = profile.p_G + profile.p_B * profile.R
    else:
        raise ValueError(f"unknown threshold reference {ref!r}")
    return gamma_t * ratio * profile.gbars / profile.gbar_G


def forward_probability(profile_sm: LinkSnrProfile, gamma_t: float,
                        ref: str = "good") -> float:
    """``P(measured SNR > gamma_t) = exp(-t_u / gbar_u)`` (same for every u)."""
    t = _state_thresholds(profile_sm, gamma_t, ref)
    if np.isinf(gamma_t):
        return 0.0
    return float(np.exp(-t[0] / profile_sm.gbar_G)) if profile_sm.gbar_G > 0 else 0.0


def relay_ber_given_threshold(profile_sm: LinkSnrProfile, gamma_t: float,
                              ref: str = "good", M: int = 2) -> float:
    """Relay BER conditioned on the forwarding test passing.

    Per state the truncated-exponential average of the BPSK error
    probability is ``(1/2)[erfc(sqrt t) - e^{t/g} sqrt(g/(1+g))
    erfc(sqrt(t(1+1/g)))]``; the product ``e^{t/g} erfc(...)`` is evaluated as
    ``erfcx(...) e^{-t}`` to stay finite.
    """
    if np.isinf(gamma_t):
        return 0.0
    (p,) = _bit_profiles(M, profile_sm)
    t = _state_thresholds(profile_sm, gamma_t, ref) * (p.gbar_G / profile_sm.gbar_G)
    g = p.gbars
    z = np.sqrt(t * (1.0 + 1.0 / g))
    per_state = 0.5 * (erfc(np.sqrt(t)) - np.sqrt(g / (1.0 + g)) * erfcx(z) * np.exp(-t))
    return float(p.weights @ per_state)


def relay_ser_given_threshold(profile_sm: LinkSnrProfile, gamma_t: float,
                              M: int = 2, ref: str = "good") -> float:
    """Relay M-PSK SER conditioned on forwarding, by one-dimensional quadrature.

    Uses the Craig form of the SER and integrates the truncated exponential
    SNR law in closed form, leaving the angle integral to ``scipy``.
    """
    if np.isinf(gamma_t):
        return 0.0
    t = _state_thresholds(profile_sm, gamma_t, ref)
    gp = _gpsk(M)
    total = 0.0
    for w, g, tu in zip(profile_sm.weights, profile_sm.gbars, t):
        if w == 0:
            continue

        def f(theta, g=g, tu=tu):
            a = gp / np.sin(theta) ** 2
            return np.exp(-tu * a) / (1.0 + g * a)

        val, _ = integrate.quad(f, 0.0, (M - 1) * np.pi / M, epsabs=1e-14, epsrel=1e-12,
                                limit=200)
        total += w * val / np.pi
    return float(total)


def sdfr_ber_threshold(profile_sd: LinkSnrProfile, profile_sm: LinkSnrProfile,
                       profile_md: LinkSnrProfile, gamma_t: float, M: int = 2,
                       ref: str = "good") -> float:
    """BER of threshold-based selective relaying.

    Forwarding frames follow the simple-relaying mixture with the
    threshold-conditioned relay BER; silent frames fall back to the direct
    link alone.
    """
    p_fwd = forward_probability(profile_sm, gamma_t, ref)
    dt = dt_ber(profile_sd, M)
    if p_fwd == 0.0:
        return dt
    p_m = relay_ber_given_threshold(profile_sm, gamma_t, ref, M)
    fwd = (p_m * smd_ber_er(profile_sd, profile_md, M)
           + (1.0 - p_m) * smd_ber_ner(profile_sd, profile_md, M))
    return p_fwd * fwd + (1.0 - p_fwd) * dt
