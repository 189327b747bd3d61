"""Experiment presets for the uncoded BER figures.

Full-scale recipes use 64,800-bit frames with the default stop rule (200 bit
errors or 2e8 bits per point); ``reference_frames=True`` instead runs exactly
2000 frames per point. ``desk_scale=True`` shortens frames to
``DESK_FRAME_SYMBOLS`` symbols (259x fewer bits per BPSK frame) and caps each
point at ``DESK_MAX_FRAMES`` frames, about 10^6 bits, so a full figure runs
in minutes on one core.
"""

from __future__ import annotations

import numpy as np

from . import analytic
from .harness import ExperimentSpec
from .noise import NoiseParams
from .relaying import LinkNoise, SchemeConfig

FIGURES = ("fig3", "fig4", "fig5", "fig8")
CODED_FIGURES = ("fig6", "fig7", "fig9", "fig10")
FRAME_BITS = 64_800
REFERENCE_FRAMES = 2000
DESK_FRAME_SYMBOLS = 250
DESK_MAX_FRAMES = 4000
SNR_GRID_DB = tuple(float(s) for s in np.arange(0.0, 30.1, 2.0))
THRESHOLDS_DB = (0.0, 5.0, 10.0)

FIG3_NOISE = NoiseParams(p_B=0.1, gamma=100.0, R=100.0)
FIG5_NOISE = NoiseParams(p_B=0.1, gamma=10.0, R=10.0)


class UnknownFigure(ValueError):
    pass


def figure_schemes(name: str) -> tuple[list[SchemeConfig], NoiseParams]:
    if name in ("fig3", "fig8"):
        order = 2 if name == "fig3" else 4
        schemes = [SchemeConfig(protocol=p, receiver=r, order=order)
                   for p in ("DT", "SDFR") for r in ("MAP", "MEMORYLESS", "AWGN_MRC")]
        return schemes, FIG3_NOISE
    if name == "fig4":
        schemes = [SchemeConfig(protocol="DT", receiver="MAP"),
                   SchemeConfig(protocol="SR", receiver="MAP"),
                   SchemeConfig(protocol="SR", receiver="MAP", relay_error_knowledge="exact"),
                   SchemeConfig(protocol="SR", receiver="MEMORYLESS",
                                relay_error_knowledge="exact")]
        return schemes, FIG3_NOISE
    if name == "fig5":
        schemes = [SchemeConfig(protocol="SR", receiver="MAP", relay_error_knowledge="exact")]
        schemes += [SchemeConfig(protocol="SDFR", receiver="MAP", sdfr_mode="threshold",
                                 gamma_t=10 ** (t / 10))
                    for t in THRESHOLDS_DB]
        return schemes, FIG5_NOISE
    if name in CODED_FIGURES:
        raise UnknownFigure(f"{name} shows LDPC-coded results, which are out of scope; "
                            f"uncoded figures are {', '.join(FIGURES)}")
    raise UnknownFigure(f"unknown figure {name!r}; choose one of {', '.join(FIGURES)}")


def figure_recipe(name: str, desk_scale: bool = False, reference_frames: bool = False,
                  seed: int = 0, snr_db=None) -> ExperimentSpec:
    """Fully populated experiment for one uncoded figure."""
    schemes, params = figure_schemes(name)
    order = schemes[0].order
    snr = list(SNR_GRID_DB if snr_db is None else snr_db)
    noise = LinkNoise.identical(params)
    if desk_scale:
        return ExperimentSpec(schemes, snr, noise, frame_symbols=DESK_FRAME_SYMBOLS,
                              max_frames=DESK_MAX_FRAMES, min_errors=200,
                              max_bits=None, seed=seed)
    K = FRAME_BITS // int(np.log2(order))
    if reference_frames:
        return ExperimentSpec(schemes, snr, noise, frame_symbols=K,
                              max_frames=REFERENCE_FRAMES, fixed_frames=True,
                              frames_per_chunk=10, seed=seed)
    return ExperimentSpec(schemes, snr, noise, frame_symbols=K, max_frames=None,
                          min_errors=200, max_bits=200_000_000, frames_per_chunk=10,
                          seed=seed)


def scheme_analytic(scheme: SchemeConfig, noise: LinkNoise) -> float | None:
    """Closed-form BER for a scheme at one SNR, or None where none applies.

    The formulas ignore the receiver type: DT gives the exact state-averaged
    BER, genie SDFR its lower bound, SR and threshold SDFR the MRC results
    without relay-error knowledge.
    """
    M = scheme.order
    geom = scheme.geometry
    sd = analytic.LinkSnrProfile.from_link(scheme.source_power, geom["sd"], noise.sd)
    if scheme.protocol == "DT":
        return analytic.dt_ber(sd, M)
    sm = analytic.LinkSnrProfile.from_link(scheme.p_s, geom["sm"], noise.sm)
    md = analytic.LinkSnrProfile.from_link(scheme.p_m, geom["md"], noise.md)
    if scheme.protocol == "SR":
        return analytic.sr_ber(sd, sm, md, M)
    if scheme.sdfr_mode == "genie":
        return analytic.sdfr_ber_lower(sd, sm, md, M)
    return analytic.sdfr_ber_threshold(sd, sm, md, scheme.gamma_t, M, scheme.threshold_ref)


def analytic_rows(spec: ExperimentSpec) -> list[tuple[float, str, float]]:
    """``(snr_db, curve, ber)`` for every distinct analytic curve of a spec."""
    rows = []
    for snr in spec.snr_db:
        noise = spec.noise.at_snr(10 ** (snr / 10))
        seen = set()
        for s in spec.schemes:
            base = SchemeConfig(**{**s.__dict__, "label": None, "receiver": "MAP",
                                   "relay_error_knowledge": "none", "theta_value": None})
            name = base.scheme_id
            if name in seen:
                continue
            seen.add(name)
            value = scheme_analytic(base, noise)
            if value is not None:
                rows.append((snr, name, value))
    return rows


def analytic_csv(rows) -> str:
    lines = ["snr_db,curve,ber"]
    lines += [f"{snr:.6g},{name},{ber:.6g}" for snr, name, ber in rows]
    return "\n".join(lines) + "\n"
