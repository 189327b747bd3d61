"""Brute-force reference for the trellis detector.

Marginalizes the joint density over every one of the ``2**K`` noise-state
sequences. Exponential in ``K``; only meant for short frames (K <= 12).
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import logsumexp

from .modem import BPSK, Modulation
from .noise import NoiseParams

MAX_K = 12


def brute_force_posteriors(y, h: complex, power: float, params: NoiseParams,
                           mod: Modulation = BPSK, priors=None) -> np.ndarray:
    """Exact ``p(x_k | y^K)`` for one short frame, shape ``(K, M)``."""
    y = np.asarray(y, dtype=complex)
    K, M = y.size, mod.order
    if K > MAX_K:
        raise ValueError(f"enumeration limited to K <= {MAX_K}, got {K}")
    if priors is None:
        priors = np.full((K, M), 1.0 / M)
    log_prior = np.log(np.broadcast_to(np.asarray(priors, dtype=float), (K, M)))

    p_GB = params.p_B / params.gamma
    p_BG = (1.0 - params.p_B) / params.gamma
    trans = {(0, 0): 1.0 - p_GB, (0, 1): p_GB, (1, 0): p_BG, (1, 1): 1.0 - p_BG}
    init = {0: 1.0 - params.p_B, 1: params.p_B}
    var = {0: params.sigma_G_sq, 1: params.R * params.sigma_G_sq}

    # loglik[k][m][s]
    loglik = np.empty((K, M, 2))
    for k in range(K):
        for m in range(M):
            r = y[k] - np.sqrt(power) * h * mod.constellation[m]
            for s in (0, 1):
                loglik[k, m, s] = -np.log(np.pi * var[s]) - abs(r) ** 2 / var[s]
    # symbol-marginalized likelihood per (k, s)
    marg = logsumexp(loglik + log_prior[:, :, None], axis=1)

    terms = [[[] for _ in range(M)] for _ in range(K)]
    for seq in itertools.product((0, 1), repeat=K):
        p_seq = init[seq[0]]
        for a, b in zip(seq[:-1], seq[1:]):
            p_seq *= trans[(a, b)]
        if p_seq == 0.0:
            continue
        rest = sum(marg[j, seq[j]] for j in range(K))
        for k in range(K):
            others = rest - marg[k, seq[k]]
            for m in range(M):
                terms[k][m].append(np.log(p_seq) + others + loglik[k, m, seq[k]])

    post = np.empty((K, M))
    for k in range(K):
        joint = np.array([log_prior[k, m] + logsumexp(terms[k][m]) for m in range(M)])
        post[k] = np.exp(joint - logsumexp(joint))
    return post


def random_case(rng: np.random.Generator, K_max: int = 8, mod: Modulation = BPSK):
    """A random short frame with random valid noise parameters.

    Returns ``(y, h, power, params)``.
    """
    K = int(rng.integers(1, K_max + 1))
    params = NoiseParams(p_B=float(rng.uniform(0.0, 1.0)),
                         gamma=float(rng.uniform(1.0, 200.0)),
                         R=float(rng.uniform(1.0, 1000.0)),
                         sigma_G_sq=float(10 ** rng.uniform(-2, 1)))
    h = complex(rng.normal(0, np.sqrt(0.5), 2) @ [1, 1j])
    power = float(rng.uniform(0.1, 2.0))
    x = mod.constellation[rng.integers(0, mod.order, K)]
    states = rng.random(K) < params.p_B
    sigma = np.sqrt(np.where(states, params.sigma_B_sq, params.sigma_G_sq) / 2)
    n = sigma * (rng.standard_normal(K) + 1j * rng.standard_normal(K))
    return np.sqrt(power) * h * x + n, h, power, params


def equivalence_suite(n_frames: int = 1000, seed: int = 0, K_max: int = 8,
                      mod: Modulation = BPSK) -> float:
    """Largest absolute posterior gap between the trellis detector and the
    enumeration over ``n_frames`` random short frames."""
    from .detectors import map_detect

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_frames):
        y, h, power, params = random_case(rng, K_max, mod)
        ref = brute_force_posteriors(y, h, power, params, mod)
        got = map_detect(y, h, power, params, mod).probs
        worst = max(worst, float(np.max(np.abs(ref - got))))
    return worst
