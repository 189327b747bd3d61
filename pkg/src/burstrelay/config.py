"""INI experiment files.

Layout::

    [experiment]
    snr_db = 0, 5, 10, 15        ; strictly increasing, dB
    frame_symbols = 250
    max_frames = 4000            ; "none" for no cap
    min_errors = 200             ; "none" disables the error target
    max_bits = 200000000         ; "none" disables the bit cap
    fixed_frames = false
    frames_per_chunk = 50
    seed = 1
    workers = 1
    calibration_frames = 1000
    record_timing = false
    output = results.csv

    [noise]                      ; applies to every link ...
    p_B = 0.1
    gamma = 100
    R = 100

    [noise.sm]                   ; ... unless overridden per link
    gamma = 10

    [scheme SR-theta]            ; one section per scheme, label after "scheme"
    protocol = SR
    receiver = MAP
    relay_error_knowledge = exact

Scheme keys are the ``SchemeConfig`` field names; ``gamma_t_db`` may be
given instead of the linear ``gamma_t``.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

from .harness import ExperimentSpec
from .noise import NoiseParams
from .relaying import LINKS, LinkNoise, SchemeConfig


class ConfigError(ValueError):
    pass


_EXPERIMENT_INT = ("frame_symbols", "frames_per_chunk", "seed", "workers",
                   "calibration_frames")
_EXPERIMENT_OPT_INT = ("max_frames", "min_errors", "max_bits")
_EXPERIMENT_BOOL = ("fixed_frames", "record_timing")
_SCHEME_FIELDS = {f.name: f for f in dataclasses.fields(SchemeConfig)}


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("none", "") else int(float(text))


def _noise(cp: configparser.ConfigParser) -> LinkNoise:
    base = dict(cp["noise"]) if cp.has_section("noise") else {}
    links = {}
    for link in LINKS:
        sec = f"noise.{link}"
        vals = {**base, **(dict(cp[sec]) if cp.has_section(sec) else {})}
        unknown = set(vals) - {"p_b", "gamma", "r"}
        if unknown:
            raise ConfigError(f"[{sec}] unknown keys {sorted(unknown)}")
        links[link] = NoiseParams(p_B=float(vals.get("p_b", 0.1)),
                                  gamma=float(vals.get("gamma", 100.0)),
                                  R=float(vals.get("r", 100.0)))
    return LinkNoise(**links)


def _scheme(label: str, section) -> SchemeConfig:
    kw = {}
    for key, raw in section.items():
        if key == "gamma_t_db":
            kw["gamma_t"] = 10 ** (float(raw) / 10)
            continue
        if key not in _SCHEME_FIELDS or key == "label":
            raise ConfigError(f"[scheme {label}] unknown key {key!r}")
        default = _SCHEME_FIELDS[key].default
        if isinstance(default, bool):
            kw[key] = section.getboolean(key)
        elif isinstance(default, int) and not isinstance(default, bool):
            kw[key] = int(raw)
        elif isinstance(default, float) or key == "theta_value":
            kw[key] = float(raw)
        else:
            kw[key] = raw.strip()
    return SchemeConfig(label=label, **kw)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentSpec:
    """Build an experiment from INI text; ``overrides`` replace experiment keys."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
        if not cp.has_section("experiment"):
            raise ConfigError("missing [experiment] section")
        exp = cp["experiment"]
        known = {"snr_db", "output", *_EXPERIMENT_INT, *_EXPERIMENT_OPT_INT,
                 *_EXPERIMENT_BOOL}
        unknown = set(exp) - known
        if unknown:
            raise ConfigError(f"[experiment] unknown keys {sorted(unknown)}")
        if "snr_db" not in exp:
            raise ConfigError("[experiment] needs snr_db")
        kw: dict = {"snr_db": _floats(exp["snr_db"])}
        for key in _EXPERIMENT_INT:
            if key in exp:
                kw[key] = exp.getint(key)
        for key in _EXPERIMENT_OPT_INT:
            if key in exp:
                kw[key] = _opt_int(exp[key])
        for key in _EXPERIMENT_BOOL:
            if key in exp:
                kw[key] = exp.getboolean(key)
        if "output" in exp:
            kw["output"] = exp["output"]
        schemes = []
        for name in cp.sections():
            if name.startswith("scheme"):
                label = name[len("scheme"):].strip()
                if not label:
                    raise ConfigError("scheme sections need a label: [scheme NAME]")
                schemes.append(_scheme(label, cp[name]))
            elif name not in ("experiment", "noise") and not name.startswith("noise."):
                raise ConfigError(f"unknown section [{name}]")
        if not schemes:
            raise ConfigError("no [scheme ...] sections")
        kw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return ExperimentSpec(schemes=schemes, noise=_noise(cp), **kw)
    except ConfigError:
        raise
    except (configparser.Error, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides: dict | None = None) -> ExperimentSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, overrides)
