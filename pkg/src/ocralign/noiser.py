"""Synthesize OCR-like noise from a :class:`~ocralign.edit_model.NoiseModel`.

Each line is processed slot by slot: the begin slot may receive an
insertion, then every clean character is kept, substituted or deleted and
its trailing slot may receive an insertion.  Each decision is a single
uniform draw against the scaled cumulative distribution, so the expected
number of errors equals the scaled model probabilities.

Random streams are derived per line from ``(seed, side, line index)``;
results do not depend on processing order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._backend import kernels
from .corpus import ParallelCorpus, tokenize
from .edit_model import BEGIN, EPSILON, NoiseModel, codepoints, compute_cer, from_codepoints

log = logging.getLogger(__name__)

DEFAULT_SEED = 20230707
ERROR_CAP = 0.95
SIDES = ("source", "target", "both", "none")
SOURCE, TARGET = 0, 1
_SIDE_IDS = {"source": (SOURCE,), "target": (TARGET,), "both": (SOURCE, TARGET), "none": ()}

# characters that str.splitlines() treats as line boundaries
LINE_BREAKS = frozenset("\n\r\x0b\x0c\x1c\x1d\x1e\x85\u2028\u2029")


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    seed: int = DEFAULT_SEED
    scale: float = 1.0
    sides: str = "both"
    cap: float = ERROR_CAP

    def __post_init__(self):
        if not self.scale >= 0.0:
            raise ValueError(f"scale must be >= 0, got {self.scale!r}")
        if self.sides not in SIDES:
            raise ValueError(f"sides must be one of {SIDES}, got {self.sides!r}")
        if not 0.0 < self.cap <= 1.0:
            raise ValueError(f"cap must be in (0, 1], got {self.cap!r}")

    @property
    def side_ids(self) -> tuple:
        return _SIDE_IDS[self.sides]


def line_rng(seed: int, side: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed % 2**64, side, index])


def scaled_mass(mass: float, scale: float, cap: float = ERROR_CAP) -> float:
    """Scale an error mass without letting scaling push it above ``cap``.

    A mass that already exceeds ``cap`` is left alone at scale 1 and is
    never raised further; every result is clipped to 1.
    """
    return min(scale * mass, max(mass, cap), 1.0)


def _safe_char(d: str) -> str:
    return " " if d in LINE_BREAKS else d


class CompiledNoise:
    """Array form of a scaled model, ready for the sampling kernel."""

    def __init__(self, model: NoiseModel, scale: float = 1.0, cap: float = ERROR_CAP):
        chars = model.alphabet
        self.index = {c: k for k, c in enumerate(chars)}
        self.begin = len(chars)
        sub_ptr, sub_cum, sub_out = [0], [], []
        ins_ptr, ins_cum, ins_out = [0], [], []
        for c in chars:
            self._append(model.sub.get(c, {}), scale, cap, sub_ptr, sub_cum, sub_out)
        for k in chars + [BEGIN]:
            self._append(model.ins.get(k, {}), scale, cap, ins_ptr, ins_cum, ins_out)
        self.sub_ptr = np.array(sub_ptr, dtype=np.int64)
        self.sub_cum = np.array(sub_cum, dtype=np.float64)
        self.sub_out = np.array(sub_out, dtype=np.int32)
        self.ins_ptr = np.array(ins_ptr, dtype=np.int64)
        self.ins_cum = np.array(ins_cum, dtype=np.float64)
        self.ins_out = np.array(ins_out, dtype=np.int32)

    @staticmethod
    def _append(row, scale, cap, ptr, cum, out):
        mass = sum(row.values())
        if mass > 0.0:
            factor = scaled_mass(mass, scale, cap) / mass
            acc = 0.0
            for d, p in sorted(row.items()):
                acc += p * factor
                cum.append(acc)
                out.append(ord(_safe_char(d)) if d != EPSILON else -1)
        ptr.append(len(cum))

    def noise(self, line: str, rng: np.random.Generator) -> str:
        codes = codepoints(line)
        ctx = np.fromiter((self.index.get(ch, -1) for ch in line), dtype=np.int32,
                          count=len(line))
        u = rng.random(2 * len(line) + 1)
        out = kernels.noise_line(codes, ctx, u, self.sub_ptr, self.sub_cum, self.sub_out,
                                 self.ins_ptr, self.ins_cum, self.ins_out, self.begin)
        return from_codepoints(out)


def apply_noise(line: str, model: NoiseModel, config: NoiseConfig = NoiseConfig(),
                rng: np.random.Generator | None = None, index: int = 0,
                side: int = SOURCE) -> str:
    """Noise a single line.  Without ``rng`` the stream for ``index`` is used."""
    if rng is None:
        rng = line_rng(config.seed, side, index)
    return CompiledNoise(model, config.scale, config.cap).noise(line, rng)


def noise_lines(lines: Sequence[str], model: NoiseModel, config: NoiseConfig = NoiseConfig(),
                side: int = SOURCE, offset: int = 0) -> list:
    """Noise ``lines``; line ``k`` uses the stream of index ``offset + k``."""
    compiled = CompiledNoise(model, config.scale, config.cap)
    return [compiled.noise(line, line_rng(config.seed, side, offset + k))
            for k, line in enumerate(lines)]


def _models_for(config, src_model, tgt_model):
    models = {SOURCE: src_model, TARGET: tgt_model}
    for side in config.side_ids:
        if models[side] is None:
            name = "source" if side == SOURCE else "target"
            raise ValueError(f"sides={config.sides!r} needs a {name} noise model")
    return models


def _rebuild(corpus, new_src, new_tgt, offset=0, length=None):
    pairs = []
    stop = len(corpus) if length is None else offset + length
    for k in range(offset, stop):
        s, t = corpus.pairs[k]
        if new_src is not None:
            s = tokenize(new_src[k - offset])
        if new_tgt is not None:
            t = tokenize(new_tgt[k - offset])
        pairs.append((s, t))
    return pairs


def noise_corpus(corpus: ParallelCorpus, src_model: NoiseModel | None,
                 tgt_model: NoiseModel | None, config: NoiseConfig = NoiseConfig()
                 ) -> ParallelCorpus:
    """Noise the sides selected by ``config.sides``; others pass through."""
    models = _models_for(config, src_model, tgt_model)
    new = {SOURCE: None, TARGET: None}
    lines = {SOURCE: corpus.source_lines, TARGET: corpus.target_lines}
    for side in config.side_ids:
        new[side] = noise_lines(lines[side], models[side], config, side)
    return ParallelCorpus(_rebuild(corpus, new[SOURCE], new[TARGET]))


def make_testsets(corpus: ParallelCorpus, src_model: NoiseModel, tgt_model: NoiseModel,
                  config: NoiseConfig = NoiseConfig()) -> dict:
    """The four variants ``cc``, ``cn``, ``nc``, ``nn`` (source first)."""
    noisy = noise_corpus(corpus, src_model, tgt_model, replace(config, sides="both"))
    out = {}
    for name, src_noisy, tgt_noisy in (("cc", False, False), ("cn", False, True),
                                       ("nc", True, False), ("nn", True, True)):
        out[name] = ParallelCorpus([(ns if src_noisy else cs, nt if tgt_noisy else ct)
                                    for (cs, ct), (ns, nt) in zip(corpus.pairs, noisy.pairs)])
    return out


def saturation_scale(model: NoiseModel, cap: float = ERROR_CAP) -> float:
    """Smallest scale beyond which no error mass changes any more."""
    best = 0.0
    for table in (model.sub, model.ins):
        for row in table.values():
            mass = sum(row.values())
            if 0.0 < mass < cap:
                best = max(best, cap / mass)
            elif mass > 0.0:
                best = max(best, 1.0)
    return best


def measure_cer(sample: Sequence[str], model: NoiseModel, config: NoiseConfig,
                side: int = SOURCE, offset: int = 0) -> float:
    noisy = noise_lines(sample, model, config, side, offset)
    return compute_cer(zip(sample, noisy)).total_cer


def calibrate_scale(model: NoiseModel, sample: Sequence[str], target_cer: float,
                    config: NoiseConfig = NoiseConfig(), side: int = SOURCE, offset: int = 0,
                    tolerance: float = 0.3, max_iter: int = 25,
                    scale_max: float | None = None) -> float:
    """Find a scale whose measured CER on ``sample`` is within ``tolerance``
    of ``target_cer``.

    The measurement uses the same per-line streams as :func:`noise_lines`
    with the same ``side``/``offset``, so noising ``sample`` afterwards
    reproduces the measured CER exactly.
    """
    if target_cer < 0:
        raise ValueError(f"target CER must be >= 0, got {target_cer!r}")
    sample = list(sample)
    if not sample:
        raise ValueError("calibration sample is empty")
    if target_cer == 0:
        return 0.0

    def measure(scale):
        return measure_cer(sample, model, replace(config, scale=scale), side, offset)

    hi_limit = saturation_scale(model, config.cap) if scale_max is None else scale_max
    max_cer = measure(hi_limit) if hi_limit > 0 else 0.0
    if max_cer < target_cer - tolerance:
        raise CalibrationError(
            f"target CER {target_cer:.2f} unreachable: at most {max_cer:.2f} "
            f"at scale {hi_limit:.4g}")

    lo, hi = 0.0, min(1.0, hi_limit)
    best = (abs(max_cer - target_cer), hi_limit)
    iters = 0
    cer = measure(hi)
    while cer < target_cer and hi < hi_limit and iters < max_iter:
        best = min(best, (abs(cer - target_cer), hi))
        lo, hi = hi, min(2.0 * hi, hi_limit)
        cer = measure(hi)
        iters += 1
    best = min(best, (abs(cer - target_cer), hi))
    while iters < max_iter and best[0] > tolerance / 3:
        mid = 0.5 * (lo + hi)
        cer = measure(mid)
        best = min(best, (abs(cer - target_cer), mid))
        if cer < target_cer:
            lo = mid
        else:
            hi = mid
        iters += 1
    if best[0] > tolerance:
        raise CalibrationError(
            f"could not reach CER {target_cer:.2f} within {tolerance} "
            f"(closest {best[0]:.2f} off at scale {best[1]:.4g})")
    log.debug("calibrated scale %.6g for target CER %.2f", best[1], target_cer)
    return best[1]


def parse_mixed(text: str) -> tuple:
    """Parse ``"2:0.33,5:0.33,10:0.34"`` into (targets, shares)."""
    targets, shares = [], []
    for item in text.split(","):
        try:
            cer, share = item.split(":")
            targets.append(float(cer))
            shares.append(float(share))
        except ValueError:
            raise ValueError(f"bad mixed-CER item {item!r}; expected CER:SHARE") from None
    return targets, shares


def block_bounds(n: int, shares: Sequence[float]) -> list:
    cum = np.cumsum([0.0] + list(shares))
    edges = [int(round(c * n)) for c in cum]
    edges[-1] = n
    return list(zip(edges[:-1], edges[1:]))


def make_mixed_corpus(corpus: ParallelCorpus, model: NoiseModel, targets: Sequence[float],
                      shares: Sequence[float], config: NoiseConfig = NoiseConfig(),
                      tgt_model: NoiseModel | None = None, scales: list | None = None
                      ) -> ParallelCorpus:
    """Noise contiguous blocks of ``corpus`` at different target CERs.

    ``model`` is used for both sides unless ``tgt_model`` is given.  The
    calibrated scales are appended to ``scales`` as ``(block, side, scale)``
    when a list is passed.
    """
    if len(targets) != len(shares) or not targets:
        raise ValueError("targets and shares must be non-empty and of equal length")
    if any(s < 0 for s in shares) or abs(sum(shares) - 1.0) > 1e-9:
        raise ValueError(f"shares must be non-negative and sum to 1, got {list(shares)}")
    models = {SOURCE: model, TARGET: tgt_model if tgt_model is not None else model}
    lines = {SOURCE: corpus.source_lines, TARGET: corpus.target_lines}
    pairs = []
    for b, (start, stop) in enumerate(block_bounds(len(corpus), shares)):
        new = {SOURCE: None, TARGET: None}
        for side in config.side_ids:
            block = lines[side][start:stop]
            if not block:
                continue
            scale = calibrate_scale(models[side], block, targets[b], config, side, start)
            if scales is not None:
                scales.append((b, side, scale))
            new[side] = noise_lines(block, models[side], replace(config, scale=scale),
                                    side, start)
        pairs.extend(_rebuild(corpus, new[SOURCE], new[TARGET], start, stop - start))
    return ParallelCorpus(pairs)
