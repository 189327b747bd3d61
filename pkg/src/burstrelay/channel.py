"""Single wireless link: block Rayleigh fading plus Markov-Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseParams, sample_noise, sample_state_seq


@dataclass(frozen=True)
class LinkGeometry:
    """Relative distance and path-loss exponent of a link."""

    lam: float = 1.0
    eta: float = 2.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"relative distance must be > 0, got {self.lam}")

    @property
    def omega(self) -> float:
        """Mean channel power gain ``1 / lam**eta``."""
        return 1.0 / self.lam ** self.eta


@dataclass
class LinkRealization:
    """One frame's worth of channel randomness for a link.

    ``h`` is constant over the frame (quasi-static fading).
    """

    h: complex
    states: np.ndarray
    noise: np.ndarray
    power: float


def sample_fading(geom: LinkGeometry, rng: np.random.Generator,
                  size=None):
    """Zero-mean circularly symmetric complex Gaussian with variance Omega."""
    if size is None:
        z = rng.standard_normal(2)
        return complex(np.sqrt(geom.omega / 2.0) * (z[0] + 1j * z[1]))
    shape = (size,) if np.isscalar(size) else tuple(size)
    z = rng.standard_normal(shape + (2,))
    return np.sqrt(geom.omega / 2.0) * (z[..., 0] + 1j * z[..., 1])


def realize_link(geom: LinkGeometry, params: NoiseParams, power: float, K: int,
                 rng: np.random.Generator) -> LinkRealization:
    h = sample_fading(geom, rng)
    states = sample_state_seq(params, K, rng)
    return LinkRealization(h, states, sample_noise(states, params, rng), power)


def transmit(symbols, link: LinkRealization) -> np.ndarray:
    """Received samples ``sqrt(P) * h * x + n``.

    Works for a single frame or a batch where ``link.h`` has one entry per
    row of ``symbols``.
    """
    symbols = np.asarray(symbols)
    noise = np.asarray(link.noise)
    if symbols.shape != noise.shape:
        raise ValueError(
            f"symbol/noise length mismatch: {symbols.shape} vs {noise.shape}")
    h = np.asarray(link.h)
    if h.ndim:
        h = h[:, None]
    return np.sqrt(link.power) * h * symbols + noise
