"""Monte Carlo BER engine.

Frames are simulated in fixed-size chunks. Chunk ``c`` at SNR index ``i``
draws all of its randomness from a Philox stream keyed by
``(seed, i, c)``, and every scheme of the experiment runs on the same chunk
draw, so the error counts depend only on the seed and never on the number
of workers or on scheduling order. Stop rules are evaluated on cumulative
counts in chunk order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .modem import bits_to_indices
from .noise import NoiseParams
from .relaying import (LinkNoise, SchemeConfig, draw_channels, relay_process,
                       run_frame, with_theta)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("snr_db", "protocol", "receiver", "bits", "errors", "ber", "stderr",
               "seconds")
CALIBRATION_KEY = 2 ** 31 - 1


class FrameFailure(RuntimeError):
    """A chunk of frames raised; carries what is needed to replay it."""

    def __init__(self, seed: int, snr_index: int, chunk: int, cause: BaseException):
        self.seed, self.snr_index, self.chunk = seed, snr_index, chunk
        super().__init__(
            f"chunk {chunk} at SNR index {snr_index} failed (seed={seed}, "
            f"stream key=({snr_index}, {chunk})): {cause!r}")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one simulation campaign.

    The stop rule ends an (SNR, scheme) point once ``min_errors`` bit errors
    or ``max_bits`` bits are reached, and never runs more than ``max_frames``
    frames. ``fixed_frames`` ignores the error and bit targets.
    """

    schemes: list[SchemeConfig]
    snr_db: list[float]
    noise: LinkNoise = field(default_factory=lambda: LinkNoise.identical(
        NoiseParams(p_B=0.1, gamma=100.0, R=100.0)))
    frame_symbols: int = 250
    max_frames: int | None = 4000
    min_errors: int | None = 200
    max_bits: int | None = 200_000_000
    fixed_frames: bool = False
    frames_per_chunk: int = 50
    seed: int = 0
    workers: int = 1
    calibration_frames: int = 1000
    record_timing: bool = False
    output: str | None = None

    def __post_init__(self):
        self.snr_db = [float(s) for s in self.snr_db]
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        if self.frame_symbols < 1:
            raise ValueError("frame length must be at least one symbol")
        if self.max_frames is not None and self.max_frames < 0:
            raise ValueError("max_frames must be nonnegative")
        if self.max_frames is None and (self.fixed_frames or (
                not self.min_errors and self.max_bits is None)):
            raise ValueError("stop rule unsatisfiable: set max_frames, max_bits "
                             "or a positive min_errors")
        if self.frames_per_chunk < 1:
            raise ValueError("frames_per_chunk must be positive")
        if self.min_errors is not None and self.min_errors < 0:
            raise ValueError("min_errors must be nonnegative")
        if self.max_bits is not None and self.max_bits <= 0:
            raise ValueError("max_bits must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        keys = [(s.scheme_id, s.receiver) for s in self.schemes]
        if len(set(keys)) != len(keys):
            raise ValueError(f"(scheme, receiver) pairs must be unique, got {keys}")


@dataclass
class Counts:
    """Additive per-point tallies; ``merge`` is associative and commutative."""

    frames: int = 0
    bits: int = 0
    errors: int = 0
    errors_sq: int = 0
    symbols: int = 0
    symbol_errors: int = 0
    symbol_errors_sq: int = 0
    seconds: float = 0.0

    def merge(self, other: "Counts") -> "Counts":
        return Counts(*(a + b for a, b in zip(self.astuple(), other.astuple())))

    def astuple(self):
        return (self.frames, self.bits, self.errors, self.errors_sq, self.symbols,
                self.symbol_errors, self.symbol_errors_sq, self.seconds)


@dataclass
class BerRecord:
    snr_db: float
    scheme: str
    protocol: str
    receiver: str
    bits: int
    errors: int
    ber: float
    stderr: float
    seconds: float
    frames: int = 0
    symbols: int = 0
    symbol_errors: int = 0
    order: int = 2
    ser_stderr: float = float("nan")

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols if self.symbols else float("nan")

    @property
    def stderr_binomial(self) -> float:
        return math.sqrt(self.ber * (1 - self.ber) / self.bits) if self.bits else float("nan")


def frame_stderr(frames: int, bits: int, errors: int, errors_sq: int) -> float:
    """Standard error of an error rate treating frames as the independent unit.

    Errors inside a block-faded frame are strongly correlated, so the
    per-bit binomial formula understates the spread. With equal-length
    frames the BER is the mean of per-frame error rates and its standard
    error follows from their sample variance. One frame falls back to the
    binomial expression.
    """
    if bits == 0:
        return float("nan")
    ber = errors / bits
    if frames < 2:
        return math.sqrt(ber * (1 - ber) / bits)
    n = bits / frames
    var = (errors_sq / n ** 2 - frames * ber ** 2) / (frames - 1)
    return math.sqrt(max(var, 0.0) / frames)


def record_from_counts(snr_db: float, scheme: SchemeConfig, c: Counts) -> BerRecord:
    ber = c.errors / c.bits if c.bits else float("nan")
    return BerRecord(snr_db, scheme.scheme_id, scheme.protocol, scheme.receiver,
                     c.bits, c.errors, ber,
                     frame_stderr(c.frames, c.bits, c.errors, c.errors_sq),
                     c.seconds, c.frames, c.symbols, c.symbol_errors, scheme.order,
                     frame_stderr(c.frames, c.symbols, c.symbol_errors, c.symbol_errors_sq))


def chunk_rng(seed: int, snr_index: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(snr_index, chunk))
    return np.random.Generator(np.random.Philox(ss))


def simulate_chunk(spec: ExperimentSpec, snr_index: int, chunk: int,
                   schemes: list[SchemeConfig], n_frames: int | None = None
                   ) -> list[Counts]:
    """Run every scheme on one shared chunk draw."""
    n_frames = n_frames or spec.frames_per_chunk
    rng = chunk_rng(spec.seed, snr_index, chunk)
    noise = spec.noise.at_snr(10 ** (spec.snr_db[snr_index] / 10))
    K = spec.frame_symbols
    # one bit block wide enough for QPSK; BPSK schemes use the first half
    bits_all = rng.integers(0, 2, size=(n_frames, 2 * K), dtype=np.int8)
    draw = draw_channels(rng, n_frames, K, noise)
    out = []
    cache: dict = {}
    for scheme in schemes:
        t0 = time.perf_counter()
        k = scheme.mod.bits_per_symbol
        bits = bits_all[:, :k * K]
        frame = run_frame(scheme, bits, noise, draw=draw, cache=cache)
        wrong = frame.bits() != bits
        per_frame = wrong.sum(axis=1).astype(np.int64)
        sym_per_frame = wrong.reshape(n_frames, K, k).any(axis=2).sum(axis=1).astype(np.int64)
        elapsed = time.perf_counter() - t0 if spec.record_timing else 0.0
        out.append(Counts(n_frames, bits.size, int(per_frame.sum()),
                          int((per_frame ** 2).sum()), n_frames * K,
                          int(sym_per_frame.sum()), int((sym_per_frame ** 2).sum()),
                          elapsed))
    return out


def _chunk_frames(spec: ExperimentSpec, chunk: int) -> int:
    if spec.max_frames is None:
        return spec.frames_per_chunk
    return max(0, min(spec.frames_per_chunk, spec.max_frames - chunk * spec.frames_per_chunk))


def _chunk_task(args):
    spec, snr_index, chunk, scheme_ids = args
    schemes = [spec.schemes[j] for j in scheme_ids]
    n = _chunk_frames(spec, chunk)
    if n == 0:
        return [Counts() for _ in schemes]
    try:
        return simulate_chunk(spec, snr_index, chunk, schemes, n)
    except Exception as exc:  # surfaced with replay info
        raise FrameFailure(spec.seed, snr_index, chunk, exc) from exc


def calibrate_theta(spec: ExperimentSpec, snr_index: int, scheme: SchemeConfig) -> float:
    """Measure the relay symbol error rate on a dedicated stream.

    For threshold SDFR only forwarded frames count.
    """
    noise = spec.noise.at_snr(10 ** (spec.snr_db[snr_index] / 10))
    K = spec.frame_symbols
    rng = chunk_rng(spec.seed, snr_index, CALIBRATION_KEY)
    mod = scheme.mod
    bits = rng.integers(0, 2, size=(spec.calibration_frames, mod.bits_per_symbol * K))
    idx = bits_to_indices(bits, mod)
    draw = draw_channels(rng, spec.calibration_frames, K, noise)
    h = draw.fading("sm", scheme.geometry["sm"])
    y = (np.sqrt(scheme.p_s) * h[:, None] * mod.constellation[idx]
         + draw.link_noise("sm", noise.sm))
    probe = replace(scheme, relay_error_knowledge="none")
    relay = relay_process(y, h, probe, noise, true_indices=idx)
    wrong = relay.decoded != idx
    if scheme.protocol == "SDFR" and scheme.sdfr_mode == "threshold":
        wrong = wrong[relay.forwarded]
    return float(wrong.mean()) if wrong.size else 0.0


def _limit_reached(spec: ExperimentSpec, c: Counts) -> bool:
    if spec.max_frames is not None and c.frames >= spec.max_frames:
        return True
    if spec.fixed_frames:
        return False
    if spec.min_errors is not None and c.errors >= spec.min_errors:
        return True
    return spec.max_bits is not None and c.bits >= spec.max_bits


def run_point(spec: ExperimentSpec, snr_index: int, pool=None) -> list[BerRecord]:
    schemes = []
    for s in spec.schemes:
        if s.protocol != "DT" and s.relay_error_knowledge == "empirical":
            s = with_theta(s, calibrate_theta(spec, snr_index, s))
        schemes.append(s)
    point_spec = replace(spec, schemes=schemes)
    totals = [Counts() for _ in schemes]
    active = [spec.max_frames != 0 for _ in schemes]
    wave = max(1, spec.workers) * 2
    chunk = 0
    while any(active):
        ids = [j for j, a in enumerate(active) if a]
        tasks = [(point_spec, snr_index, chunk + c, ids) for c in range(wave)]
        results = list(pool.map(_chunk_task, tasks)) if pool else map(_chunk_task, tasks)
        for res in results:
            for j, counts in zip(ids, res):
                if active[j]:
                    totals[j] = totals[j].merge(counts)
                    if _limit_reached(spec, totals[j]):
                        active[j] = False
            ids_left = [j for j in ids if active[j]]
            if not ids_left:
                break
        chunk += wave
    snr = spec.snr_db[snr_index]
    return [record_from_counts(snr, s, c) for s, c in zip(schemes, totals) if c.frames]


def run_experiment(spec: ExperimentSpec) -> list[BerRecord]:
    """Simulate every (SNR, scheme) point; records ordered by SNR then scheme."""
    if spec.max_frames == 0 or not spec.schemes:
        return []
    records: list[BerRecord] = []
    pool = ProcessPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        for i, snr in enumerate(spec.snr_db):
            t0 = time.perf_counter()
            point = run_point(spec, i, pool)
            log.info("SNR %.2f dB done in %.1fs", snr, time.perf_counter() - t0)
            records.extend(point)
    finally:
        if pool:
            pool.shutdown()
    if spec.output:
        emit_csv(records, spec.output)
    return records


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(r.snr_db), r.scheme, r.receiver, _fmt(r.bits), _fmt(r.errors),
                    _fmt(r.ber), _fmt(r.stderr), _fmt(r.seconds)])
    return buf.getvalue()


def emit_csv(records, path) -> Path:
    """Write records as UTF-8 CSV with LF endings.

    The ``protocol`` column carries the scheme label, which starts with the
    protocol name and adds qualifiers such as ``-genie`` or ``+theta:exact``.
    """
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(records))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
