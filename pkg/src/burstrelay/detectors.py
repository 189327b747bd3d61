"""Soft symbol detectors for a single faded Markov-Gaussian link.

``map_detect`` runs the forward/backward recursion over the two-state noise
trellis. ``memoryless_detect`` treats the noise as an i.i.d. two-component
Gaussian mixture and ``awgn_detect`` as plain Gaussian noise. All detectors
accept either one frame (``y`` of shape ``(K,)``, scalar ``h``) or a batch of
frames (``y`` of shape ``(F, K)``, ``h`` of shape ``(F,)``) and work in the
log domain end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .modem import BPSK, Modulation, demap_bits
from .noise import NoiseParams


@dataclass
class SymbolPosteriors:
    """Normalized per-symbol log-posteriors, shape ``(..., K, M)``."""

    log_probs: np.ndarray
    mod: Modulation = BPSK

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def __len__(self) -> int:
        return self.log_probs.shape[-2]

    def llrs(self) -> np.ndarray:
        """Bit LLRs (positive favours bit 0), ``log2(M)`` per symbol."""
        if self.mod.order == 2:
            return self.log_probs[..., 0] - self.log_probs[..., 1]
        return demap_bits(self.log_probs, self.mod, log_domain=True)

    def decisions(self) -> np.ndarray:
        """Most probable symbol index per step."""
        return np.argmax(self.log_probs, axis=-1)


@dataclass
class TrellisWorkspace:
    """Forward/backward state of one detection call.

    ``alpha`` and ``beta`` are per-step max-normalized log metrics with shape
    ``(F, K+1, 2)``; ``log_scale_*`` hold the removed normalizers so that
    ``log p(y^K)`` can be recovered from either direction.
    """

    alpha: np.ndarray
    beta: np.ndarray
    branch: np.ndarray
    log_scale_fwd: np.ndarray
    log_scale_bwd: np.ndarray
    log_stationary: np.ndarray

    def log_evidence_forward(self) -> np.ndarray:
        return self.log_scale_fwd + logsumexp(self.alpha[:, -1], axis=-1)

    def log_evidence_backward(self) -> np.ndarray:
        return self.log_scale_bwd + logsumexp(
            self.log_stationary + self.beta[:, 0], axis=-1)


def _as_batch(y, h):
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    y2 = np.atleast_2d(y)
    h2 = np.atleast_1d(np.asarray(h, dtype=complex))
    if h2.shape[0] != y2.shape[0]:
        if h2.size == 1:
            h2 = np.broadcast_to(h2, (y2.shape[0],))
        else:
            raise ValueError("need one fading coefficient per frame")
    if not (np.all(np.isfinite(y2)) and np.all(np.isfinite(h2))):
        raise ValueError("received samples and fading coefficients must be finite")
    return y2, h2, single


def _log_priors(priors, shape, M):
    if priors is None:
        return np.full((M,), -np.log(M))
    priors = np.asarray(priors, dtype=float)
    if priors.shape[-1] != M:
        raise ValueError(f"priors need {M} entries per symbol")
    with np.errstate(divide="ignore"):
        return np.log(priors)


def _sq_distance(y2, h2, power, mod, active=None):
    """``|y_k - sqrt(P) h x_m|^2`` with shape ``(F, K, M)``.

    Where ``active`` is False nothing was transmitted, so every hypothesis
    predicts a zero mean and the step carries no symbol information.
    """
    mean = (np.sqrt(power) * h2[:, None] * mod.constellation[None, :])[:, None, :]
    if active is not None:
        mean = mean * np.broadcast_to(active, y2.shape)[:, :, None]
    return np.abs(y2[:, :, None] - mean) ** 2


def _finish(logp, single, mod):
    logp = logp - _lse(logp, axis=-1, keepdims=True)
    return SymbolPosteriors(logp[0] if single else logp, mod)


def _lse2(a):
    """Log-sum-exp over a last axis of length 2."""
    return np.logaddexp(a[..., 0], a[..., 1])


def _lse(a, axis=-1, keepdims=False):
    if a.shape[axis] == 2:
        a0, a1 = np.split(a, 2, axis=axis)
        out = np.logaddexp(a0, a1)
        return out if keepdims else np.squeeze(out, axis=axis)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return out if keepdims else np.squeeze(out, axis=axis)


def _state_loglik(d2, variances):
    """Per-state Gaussian log-likelihoods, shape ``(F, K, M, 2)``."""
    var = np.asarray(variances)
    return -np.log(np.pi * var) - d2[..., None] / var


def forward_backward(branch: np.ndarray, log_prior: np.ndarray,
                     params: NoiseParams) -> tuple[TrellisWorkspace, np.ndarray]:
    """Run the recursions on precomputed state log-likelihoods.

    ``branch[f, k, m, s] = log p(y_k | x_m, s_k = s)`` and ``log_prior``
    broadcasts against ``branch[..., 0]``. Returns the workspace and the
    unnormalized log joint ``log p(x_k = m, y^K)`` up to a per-frame constant.
    """
    F, K = branch.shape[:2]
    with np.errstate(divide="ignore"):
        log_T = np.log(params.transition_matrix())
        log_pi = np.log(params.stationary)

    # emission per state with the symbol marginalized under its prior
    emit = _lse(branch + log_prior[..., None], axis=2)

    alpha = np.empty((F, K + 1, 2))
    beta = np.empty((F, K + 1, 2))
    to_next = np.empty((F, K, 2))
    scale_f = np.zeros(F)
    scale_b = np.zeros(F)

    a = np.broadcast_to(log_pi, (F, 2)).copy()
    alpha[:, 0] = a
    for k in range(K):
        t = a + emit[:, k]
        a = np.logaddexp(t[:, 0, None] + log_T[0], t[:, 1, None] + log_T[1])
        c = np.maximum(a[:, 0], a[:, 1])
        a -= c[:, None]
        scale_f += c
        alpha[:, k + 1] = a

    b = np.zeros((F, 2))
    beta[:, K] = b
    for k in range(K - 1, -1, -1):
        g = np.logaddexp(log_T[:, 0] + b[:, 0, None], log_T[:, 1] + b[:, 1, None])
        to_next[:, k] = g
        b = emit[:, k] + g
        c = np.maximum(b[:, 0], b[:, 1])
        b -= c[:, None]
        scale_b += c
        beta[:, k] = b

    work = TrellisWorkspace(alpha, beta, branch, scale_f, scale_b, log_pi)
    joint = _lse2(alpha[:, :K, None, :] + branch + to_next[:, :, None, :])
    return work, joint + log_prior


def map_detect(y, h, power: float, params: NoiseParams, mod: Modulation = BPSK,
               priors=None, *, active=None, return_workspace: bool = False):
    """MAP symbol posteriors exploiting the noise-state memory.

    The posterior at step ``k`` is proportional to
    ``prior(x) * sum_{s_k, s_k+1} alpha_k(s_k) delta_k(x, s_k, s_k+1) beta_k+1(s_k+1)``
    where the branch metric ``delta`` is the state transition probability
    times the state-conditioned Gaussian density of ``y_k - sqrt(P) h x``.
    """
    y2, h2, single = _as_batch(y, h)
    if y2.shape[1] == 0:
        empty = np.zeros(y2.shape + (mod.order,))
        return SymbolPosteriors(empty[0] if single else empty, mod)
    branch = _state_loglik(_sq_distance(y2, h2, power, mod, active), params.variances)
    work, joint = forward_backward(branch, _log_priors(priors, y2.shape, mod.order),
                                   params)
    post = _finish(joint, single, mod)
    return (post, work) if return_workspace else post


def memoryless_detect(y, h, power: float, params: NoiseParams,
                      mod: Modulation = BPSK, priors=None, *,
                      active=None) -> SymbolPosteriors:
    """Per-symbol posteriors under an i.i.d. ``p_G N(sG^2) + p_B N(sB^2)`` mixture."""
    y2, h2, single = _as_batch(y, h)
    branch = _state_loglik(_sq_distance(y2, h2, power, mod, active), params.variances)
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.stationary)
    logp = _lse2(branch + log_pi) + _log_priors(priors, y2.shape, mod.order)
    return _finish(logp, single, mod)


def awgn_detect(y, h, power: float, sigma_total_sq: float,
                mod: Modulation = BPSK, priors=None, *,
                active=None) -> SymbolPosteriors:
    """Posteriors assuming Gaussian noise of variance ``sigma_total_sq``.

    For BPSK the LLR is ``4 sqrt(P) Re(conj(h) y) / sigma^2``.
    """
    if not sigma_total_sq > 0:
        raise ValueError(f"noise variance must be > 0, got {sigma_total_sq}")
    y2, h2, single = _as_batch(y, h)
    logp = (-_sq_distance(y2, h2, power, mod, active) / sigma_total_sq
            + _log_priors(priors, y2.shape, mod.order))
    return _finish(logp, single, mod)


def genie_detect(y, h, power: float, states, params: NoiseParams,
                 mod: Modulation = BPSK, priors=None, *,
                 active=None) -> SymbolPosteriors:
    """Posteriors for a receiver told the true noise state of every symbol."""
    y2, h2, single = _as_batch(y, h)
    var = params.variances[np.atleast_2d(np.asarray(states))]
    logp = (-_sq_distance(y2, h2, power, mod, active) / var[..., None]
            + _log_priors(priors, y2.shape, mod.order))
    return _finish(logp, single, mod)
