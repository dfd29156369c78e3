"""End-to-end runs driven by a flat ``key = value`` config file.

Stages: extract -> noise -> train -> testsets -> align -> evaluate.  Each
run writes ``manifest.json`` with the resolved config, the SHA-256 of every
input and output, the seed and the package version; passing that manifest
back in reruns the same configuration.

Config keys (paths are relative to the config file)::

    train_src, train_tgt      clean training corpus               (required)
    test_src, test_tgt, gold  test corpus and its gold alignments (required)
    ocr_clean, ocr_noisy      clean/OCR line pairs -> source noise model (required)
    tgt_ocr_clean, tgt_ocr_noisy   optional target-side pairs (default: source model)
    out_dir                   output directory (default: ./pipeline-out)
    seed                      noise seed (default 20230707)
    scale | target_cer | mixed_cer   noise strength (default scale = 1)
    sides                     source | target | both | none (default both)
    aligner                   ibm1 | ibm2 | diag (default diag)
    iterations, model1_iterations, tension, null_prob, lowercase
    one_indexed_gold, nfc
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .aligners import (DEFAULT_ITERATIONS, DEFAULT_NULL_PROB, DEFAULT_TENSION, KINDS,
                       align_corpus, save_aligner, train)
from .corpus import ParallelCorpus, load_parallel, read_gold, read_lines, save_parallel, \
    write_alignments
from .edit_model import compute_cer, extract_noise_model, save_model
from .evaluation import count_links, evaluate
from .noiser import (DEFAULT_SEED, SIDES, SOURCE, TARGET, NoiseConfig, calibrate_scale,
                     make_mixed_corpus, make_testsets, noise_corpus, parse_mixed)

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "ocralign-manifest"
TESTSETS = ("cc", "cn", "nc", "nn")


class ConfigError(ValueError):
    """Invalid configuration; reported before any stage runs."""


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage


_PATH_KEYS = ("train_src", "train_tgt", "test_src", "test_tgt", "gold", "ocr_clean",
              "ocr_noisy", "tgt_ocr_clean", "tgt_ocr_noisy")
_REQUIRED = ("train_src", "train_tgt", "test_src", "test_tgt", "gold", "ocr_clean", "ocr_noisy")


@dataclass
class PipelineConfig:
    train_src: str = ""
    train_tgt: str = ""
    test_src: str = ""
    test_tgt: str = ""
    gold: str = ""
    ocr_clean: str = ""
    ocr_noisy: str = ""
    tgt_ocr_clean: str = ""
    tgt_ocr_noisy: str = ""
    out_dir: str = "pipeline-out"
    seed: int = DEFAULT_SEED
    scale: float = 1.0
    target_cer: float | None = None
    mixed_cer: str = ""
    sides: str = "both"
    aligner: str = "diag"
    iterations: int = DEFAULT_ITERATIONS
    model1_iterations: int = DEFAULT_ITERATIONS
    tension: float = DEFAULT_TENSION
    null_prob: float | None = DEFAULT_NULL_PROB
    lowercase: bool = False
    one_indexed_gold: bool = False
    nfc: bool = False
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self) -> "PipelineConfig":
        for key in _REQUIRED:
            if not getattr(self, key):
                raise ConfigError(f"missing required key {key!r}")
        if bool(self.tgt_ocr_clean) != bool(self.tgt_ocr_noisy):
            raise ConfigError("tgt_ocr_clean and tgt_ocr_noisy must be given together")
        for key in _PATH_KEYS:
            path = getattr(self, key)
            if path and not os.path.isfile(path):
                raise ConfigError(f"{key}: no such file {path!r}")
        if self.sides not in SIDES:
            raise ConfigError(f"sides must be one of {SIDES}")
        if self.aligner not in KINDS:
            raise ConfigError(f"aligner must be one of {KINDS}")
        if self.iterations < 1 or self.model1_iterations < 0:
            raise ConfigError("iterations must be >= 1 and model1_iterations >= 0")
        if self.scale < 0 or (self.target_cer is not None and self.target_cer < 0):
            raise ConfigError("scale and target_cer must be >= 0")
        if self.target_cer is not None and self.mixed_cer:
            raise ConfigError("target_cer and mixed_cer are mutually exclusive")
        if self.mixed_cer:
            try:
                targets, shares = parse_mixed(self.mixed_cer)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if abs(sum(shares) - 1.0) > 1e-9:
                raise ConfigError(f"mixed_cer shares must sum to 1, got {sum(shares)!r}")
        if self.tension <= 0:
            raise ConfigError("tension must be > 0")
        if self.extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(self.extra))}")
        return self

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extra"}


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key, value: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "float | None":
            return None if value.lower() in ("", "none", "uniform") else float(value)
        if kind == "bool":
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return value


def apply_overrides(config: PipelineConfig, items: dict, base_dir: str = ".") -> PipelineConfig:
    extra = dict(config.extra)
    updates = {}
    for key, value in items.items():
        if key not in _FIELD_TYPES or key == "extra":
            extra[key] = value
            continue
        value = _coerce(key, value) if isinstance(value, str) else value
        if (key in _PATH_KEYS or key == "out_dir") and value:
            value = os.path.normpath(os.path.join(base_dir, value))
        updates[key] = value
    return replace(config, extra=extra, **updates)


def parse_config_text(text: str, base_dir: str = ".") -> PipelineConfig:
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        items[key] = value
    return apply_overrides(PipelineConfig(), items, base_dir)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), os.path.dirname(os.path.abspath(path)))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            log.info("stage %s", name)
            try:
                return fn(*args, **kwargs)
            except (StageError, KeyboardInterrupt):
                raise
            except Exception as exc:
                raise StageError(name, exc) from exc
        return run
    return wrap


def _noise_config(cfg):
    return NoiseConfig(seed=cfg.seed, scale=cfg.scale, sides=cfg.sides)


@_stage("extract")
def _extract(cfg, out):
    src_pairs = list(zip(*_paired_lines(cfg.ocr_clean, cfg.ocr_noisy, cfg.nfc)))
    models = {SOURCE: extract_noise_model(src_pairs)}
    reports = {"source": compute_cer(src_pairs)}
    if cfg.tgt_ocr_clean:
        tgt_pairs = list(zip(*_paired_lines(cfg.tgt_ocr_clean, cfg.tgt_ocr_noisy, cfg.nfc)))
        models[TARGET] = extract_noise_model(tgt_pairs)
        reports["target"] = compute_cer(tgt_pairs)
    else:
        models[TARGET] = models[SOURCE]
    save_model(models[SOURCE], out / "noise.source.json")
    save_model(models[TARGET], out / "noise.target.json")
    return models, reports


def _paired_lines(clean_path, noisy_path, nfc):
    clean = read_lines(clean_path, nfc=nfc)
    noisy = read_lines(noisy_path, nfc=nfc)
    if len(clean) != len(noisy):
        raise ValueError(f"line count mismatch {len(clean)} vs {len(noisy)} "
                         f"({clean_path}, {noisy_path})")
    return clean, noisy


def _calibrated_scales(models, corpus, target, config):
    lines = {SOURCE: corpus.source_lines, TARGET: corpus.target_lines}
    return {side: calibrate_scale(models[side], lines[side], target, config, side)
            for side in config.side_ids}


def noise_with_scales(corpus, models, scales, config):
    """Noise each selected side at its own scale."""
    out = corpus
    for side in config.side_ids:
        one = replace(config, scale=scales[side], sides="source" if side == SOURCE else "target")
        out = noise_corpus(out, models[SOURCE], models[TARGET], one)
    return out


@_stage("noise")
def _noise(cfg, models, corpus, out):
    config = _noise_config(cfg)
    if cfg.mixed_cer:
        targets, shares = parse_mixed(cfg.mixed_cer)
        noisy = make_mixed_corpus(corpus, models[SOURCE], targets, shares, config,
                                  tgt_model=models[TARGET])
        scales = {}
    elif cfg.target_cer is not None:
        scales = _calibrated_scales(models, corpus, cfg.target_cer, config)
        noisy = noise_with_scales(corpus, models, scales, config)
    else:
        scales = {side: cfg.scale for side in config.side_ids}
        noisy = noise_corpus(corpus, models[SOURCE], models[TARGET], config)
    save_parallel(noisy, out / "train.noisy.src", out / "train.noisy.tgt")
    return noisy, scales


@_stage("train")
def _train(cfg, corpus, out):
    model = train(corpus, cfg.aligner, cfg.iterations, cfg.model1_iterations, cfg.tension,
                  cfg.null_prob, cfg.lowercase)
    save_aligner(model, out / "aligner.model")
    return model


@_stage("testsets")
def _testsets(cfg, models, test, scales, out):
    config = replace(_noise_config(cfg), sides="both")
    if cfg.mixed_cer or cfg.target_cer is not None:
        target = cfg.target_cer
        if target is None:
            targets, shares = parse_mixed(cfg.mixed_cer)
            target = sum(t * s for t, s in zip(targets, shares))
        test_scales = _calibrated_scales(models, test, target, config)
        noisy = noise_with_scales(test, models, test_scales, config)
        sets = {"cc": test}
        for name, s_noisy, t_noisy in (("cn", False, True), ("nc", True, False),
                                       ("nn", True, True)):
            sets[name] = ParallelCorpus([(ns if s_noisy else cs, nt if t_noisy else ct)
                                         for (cs, ct), (ns, nt) in zip(test.pairs, noisy.pairs)])
    else:
        sets = make_testsets(test, models[SOURCE], models[TARGET], config)
    for name, corpus in sets.items():
        save_parallel(corpus, out / f"test.{name}.src", out / f"test.{name}.tgt")
    return sets


@_stage("align")
def _align(model, sets, out):
    preds = {}
    for name in TESTSETS:
        preds[name] = align_corpus(model, sets[name])
        write_alignments(preds[name], out / f"align.{name}")
    return preds


@_stage("evaluate")
def _evaluate(cfg, preds, out):
    gold = read_gold(cfg.gold, one_indexed=cfg.one_indexed_gold)
    lines = []
    reports = {}
    for name in TESTSETS:
        report = evaluate(preds[name], gold)
        reports[name] = report
        lines.append(f"[{name}]")
        lines.append(report.as_kv())
        lines.append(f"links={count_links(preds[name])}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return reports


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage; returns the per-test-set :class:`EvalReport` dict."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = {key: sha256_file(getattr(cfg, key)) for key in _PATH_KEYS if getattr(cfg, key)}

    models, cer_reports = _extract(cfg, out)
    try:
        train_corpus = load_parallel(cfg.train_src, cfg.train_tgt, nfc=cfg.nfc)
        test_corpus = load_parallel(cfg.test_src, cfg.test_tgt, nfc=cfg.nfc)
    except Exception as exc:
        raise StageError("load", exc) from exc
    noisy, scales = _noise(cfg, models, train_corpus, out)
    model = _train(cfg, train_corpus + noisy, out)
    sets = _testsets(cfg, models, test_corpus, scales, out)
    preds = _align(model, sets, out)
    reports = _evaluate(cfg, preds, out)

    outputs = {p.name: sha256_file(p) for p in sorted(out.iterdir())
               if p.is_file() and p.name != "manifest.json"}
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "inputs": inputs,
        "noise_scales": {("source" if k == SOURCE else "target"): v
                         for k, v in sorted(scales.items())},
        "ocr_cer": {k: r.total_cer for k, r in cer_reports.items()},
        "outputs": outputs,
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return reports


def config_from_manifest(path, out_dir: str | None = None,
                         check_inputs: bool = True) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") != MANIFEST_FORMAT:
        raise ConfigError(f"{path}: not a pipeline manifest")
    cfg = PipelineConfig(**data["config"])
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if check_inputs:
        for key, digest in data.get("inputs", {}).items():
            path_ = getattr(cfg, key)
            if not os.path.isfile(path_):
                raise ConfigError(f"{key}: no such file {path_!r}")
            if sha256_file(path_) != digest:
                raise ConfigError(f"{key}: {path_!r} changed since the manifest was written")
    return cfg
