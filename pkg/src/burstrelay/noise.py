"""Two-state Markov-Gaussian noise.

Each link carries a hidden state chain over {G, B}. Conditioned on the state,
the noise sample is circularly symmetric complex Gaussian with variance
``sigma_G_sq`` (good) or ``R * sigma_G_sq`` (bad).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GOOD = 0
BAD = 1


@dataclass(frozen=True)
class NoiseParams:
    """Parameters of one link's Markov-Gaussian noise process.

    Attributes:
        p_B: stationary probability of the bad state.
        gamma: memory parameter, the reciprocal of ``p_GB + p_BG``.
        R: bad-to-good noise power ratio.
        sigma_G_sq: good-state noise power.
    """

    p_B: float
    gamma: float
    R: float
    sigma_G_sq: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_B <= 1.0:
            raise ValueError(f"p_B must lie in [0, 1], got {self.p_B}")
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not self.R >= 1.0:
            raise ValueError(f"R must be >= 1, got {self.R}")
        if not self.sigma_G_sq > 0.0:
            raise ValueError(f"sigma_G_sq must be > 0, got {self.sigma_G_sq}")

    @property
    def p_G(self) -> float:
        return 1.0 - self.p_B

    @property
    def sigma_B_sq(self) -> float:
        return self.R * self.sigma_G_sq

    @property
    def variances(self) -> np.ndarray:
        """State-indexed noise variances ``[sigma_G^2, sigma_B^2]``."""
        return np.array([self.sigma_G_sq, self.sigma_B_sq])

    @property
    def stationary(self) -> np.ndarray:
        return np.array([self.p_G, self.p_B])

    @property
    def mean_power(self) -> float:
        """State-averaged noise power ``p_G sigma_G^2 + p_B sigma_B^2``."""
        return self.p_G * self.sigma_G_sq + self.p_B * self.sigma_B_sq

    def with_sigma(self, sigma_G_sq: float) -> "NoiseParams":
        return NoiseParams(self.p_B, self.gamma, self.R, sigma_G_sq)

    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic matrix ``T[s, s'] = p(s' | s)`` with G=0, B=1."""
        p_GB, p_BG = transition_probs(self)
        return np.array([[1.0 - p_GB, p_GB], [p_BG, 1.0 - p_BG]])


def transition_probs(params: NoiseParams) -> tuple[float, float]:
    """Invert (p_B, gamma) into the transition probabilities (p_GB, p_BG).

    Solves ``p_B = p_GB / (p_GB + p_BG)`` and ``gamma = 1 / (p_GB + p_BG)``.
    """
    if not 0.0 <= params.p_B <= 1.0:
        raise ValueError(f"p_B must lie in [0, 1], got {params.p_B}")
    if params.gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {params.gamma}")
    p_GB = params.p_B / params.gamma
    p_BG = (1.0 - params.p_B) / params.gamma
    return p_GB, p_BG


def sample_state_seq(params: NoiseParams, K: int, rng: np.random.Generator,
                     n_frames: int | None = None) -> np.ndarray:
    """Draw state sequences (0 = G, 1 = B) of length ``K``.

    The first state is drawn from the stationary distribution. With
    ``n_frames`` set, returns an ``(n_frames, K)`` array of independent
    chains; otherwise a 1-D array of length ``K``.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    p_GB, p_BG = transition_probs(params)
    shape = (1 if n_frames is None else n_frames, K)
    u = rng.random(shape)
    # gamma >= 1 gives p_GB <= 1 - p_BG, so each uniform either forces B
    # (u < p_GB), forces G (u >= 1 - p_BG) or keeps the previous state.
    events = np.full(shape, -1, dtype=np.int8)
    events[u < p_GB] = BAD
    events[u >= 1.0 - p_BG] = GOOD
    events[:, 0] = u[:, 0] < params.p_B
    last = np.where(events >= 0, np.arange(K), 0)
    np.maximum.accumulate(last, axis=1, out=last)
    states = np.take_along_axis(events, last, axis=1)
    return states[0] if n_frames is None else states


def sample_noise(states: np.ndarray, params: NoiseParams,
                 rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian noise with per-sample variance set by ``states``."""
    states = np.asarray(states)
    std = np.sqrt(params.variances[states] / 2.0)
    z = rng.standard_normal(states.shape + (2,))
    return std * (z[..., 0] + 1j * z[..., 1])


def log_pdf(sample, state, params: NoiseParams):
    """Log-density of a circularly symmetric complex Gaussian sample.

    ``state`` is 0/1 (or "G"/"B"); broadcasts over arrays.
    """
    if isinstance(state, str):
        state = {"G": GOOD, "B": BAD}[state]
    var = params.variances[np.asarray(state)]
    return -np.log(np.pi * var) - np.abs(sample) ** 2 / var
