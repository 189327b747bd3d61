"""Decode-and-forward relaying over Rayleigh fading with bursty impulsive noise.

Modules: ``noise`` (two-state Markov-Gaussian noise), ``channel`` (block
fading links), ``modem`` (BPSK/Gray QPSK), ``detectors`` (trellis MAP and
baseline receivers), ``relaying`` (DT, SR, SDFR), ``analytic`` (closed-form
error rates), ``harness``/``recipes``/``cli`` (Monte Carlo sweeps).
"""

from .analytic import LinkSnrProfile, dt_ber, dt_ber_bpsk, dt_ser_mpsk, sdfr_ber_lower, \
    sdfr_ber_threshold, sr_ber
from .channel import LinkGeometry, realize_link, transmit
from .detectors import awgn_detect, genie_detect, map_detect, memoryless_detect
from .harness import BerRecord, ExperimentSpec, emit_csv, run_experiment
from .modem import BPSK, QPSK, demap_bits, modulate
from .noise import NoiseParams, sample_noise, sample_state_seq
from .recipes import figure_recipe
from .relaying import LinkNoise, SchemeConfig, combine_map, relay_process, run_frame

__version__ = "0.1.0"
