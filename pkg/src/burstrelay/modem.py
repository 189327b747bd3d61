"""BPSK and Gray-coded QPSK mapping, soft demapping and hard decisions.

Conventions used throughout the package:

* bit 0 maps to the positive amplitude (BPSK: 0 -> +1, 1 -> -1);
* QPSK symbol index ``m = 2*b1 + b2`` sits at ``((1-2*b1) + 1j*(1-2*b2))/sqrt(2)``,
  so bit 1 rides on the in-phase sign and bit 2 on the quadrature sign;
* a positive LLR favours bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True)
class Modulation:
    order: int = 2
    constellation: np.ndarray = field(init=False, repr=False, compare=False)
    labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order == 2:
            points = np.array([1.0 + 0j, -1.0 + 0j])
        elif self.order == 4:
            points = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
        else:
            raise ValueError(f"only M=2 and M=4 are supported, got {self.order}")
        k = int(np.log2(self.order))
        idx = np.arange(self.order)
        labels = (idx[:, None] >> np.arange(k - 1, -1, -1)) & 1
        object.__setattr__(self, "constellation", points)
        object.__setattr__(self, "labels", labels.astype(np.int8))

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    @cached_property
    def _weights(self) -> np.ndarray:
        return 1 << np.arange(self.bits_per_symbol - 1, -1, -1)


BPSK = Modulation(2)
QPSK = Modulation(4)


def get_modulation(order: int) -> Modulation:
    return {2: BPSK, 4: QPSK}.get(order) or Modulation(order)


def bits_to_indices(bits, mod: Modulation = BPSK) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    k = mod.bits_per_symbol
    if bits.shape[-1] % k:
        raise ValueError(
            f"bit count {bits.shape[-1]} is not a multiple of {k} for M={mod.order}")
    grouped = bits.reshape(bits.shape[:-1] + (bits.shape[-1] // k, k))
    return grouped @ mod._weights


def indices_to_bits(indices, mod: Modulation = BPSK) -> np.ndarray:
    indices = np.asarray(indices)
    bits = mod.labels[indices]
    return bits.reshape(indices.shape[:-1] + (-1,)) if indices.ndim else bits


def modulate(bits, mod: Modulation = BPSK) -> np.ndarray:
    """Map a bit array (last axis) to unit-energy symbols."""
    return mod.constellation[bits_to_indices(bits, mod)]


def demap_bits(posteriors, mod: Modulation = BPSK, *, log_domain: bool = False,
               atol: float = 1e-6) -> np.ndarray:
    """Per-bit LLRs from per-symbol posteriors (last axis has M entries).

    The LLR of bit ``l`` is ``ln(sum_{x: b_l=0} p(x|y) / sum_{x: b_l=1} p(x|y))``.
    With ``log_domain`` the input holds log-posteriors, which keeps large
    LLRs exact. Output has ``log2(M)`` LLRs per symbol, flattened along the
    last axis in symbol order.
    """
    post = np.asarray(posteriors, dtype=float)
    if post.shape[-1] != mod.order:
        raise ValueError(f"expected {mod.order} posterior entries, got {post.shape[-1]}")
    if log_domain:
        logp = post
        if post.size and np.any(np.all(np.isneginf(post), axis=-1)):
            raise ValueError("degenerate posterior: every symbol has zero probability")
    else:
        if np.any(post < 0):
            raise ValueError("posterior probabilities must be nonnegative")
        sums = post.sum(axis=-1)
        if post.size and np.any(sums == 0):
            raise ValueError("degenerate posterior: every symbol has zero probability")
        if not np.allclose(sums, 1.0, atol=atol):
            raise ValueError("posterior vectors must sum to 1")
        with np.errstate(divide="ignore"):
            logp = np.log(post)
    k = mod.bits_per_symbol
    llrs = np.empty(post.shape[:-1] + (k,))
    for l in range(k):
        zero = mod.labels[:, l] == 0
        llrs[..., l] = (logsumexp(logp[..., zero], axis=-1)
                        - logsumexp(logp[..., ~zero], axis=-1))
    return llrs.reshape(post.shape[:-2] + (-1,)) if post.ndim > 1 else llrs


def hard_decision(llrs) -> np.ndarray:
    """Bit 0 where the LLR is nonnegative, bit 1 otherwise."""
    return (np.asarray(llrs, dtype=float) < 0).astype(np.int8)
