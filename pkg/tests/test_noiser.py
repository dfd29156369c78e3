from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocralign.corpus import ParallelCorpus
from ocralign.edit_model import NoiseModel, compute_cer, extract_noise_model
from ocralign.noiser import (LINE_BREAKS, SOURCE, TARGET, CalibrationError, NoiseConfig,
                             apply_noise, block_bounds, calibrate_scale, make_mixed_corpus,
                             make_testsets, measure_cer, noise_corpus, noise_lines,
                             parse_mixed, scaled_mass)
from ocralign.synthetic import clean_lines, ocr_pairs


@pytest.fixture(scope="module")
def ocr_model():
    return extract_noise_model(ocr_pairs(7, 1500))


@pytest.fixture(scope="module")
def sample():
    return clean_lines(21, 300)


def sub_only(row, char="a"):
    return NoiseModel(sub={char: row}, char_counts={char: 1})


def test_forced_substitution():
    assert apply_noise("aa", sub_only({"b": 1.0})) == "bb"


def test_forced_deletion():
    assert apply_noise("ab", sub_only({"": 1.0})) == "b"


def test_forced_begin_insertion():
    m = NoiseModel(ins={"<begin>": {"x": 1.0}}, char_counts={"<begin>": 1})
    assert apply_noise("ab", m) == "xab"


def test_scale_zero_is_identity(ocr_model, sample):
    cfg = NoiseConfig(scale=0.0)
    assert noise_lines(sample, ocr_model, cfg) == sample


def test_line_breaks_never_emitted():
    m = NoiseModel(sub={"a": {"\n": 0.5, " ": 0.5}},
                   ins={"a": {"\r": 0.5, "\x85": 0.5}}, char_counts={"a": 2})
    out = apply_noise("a" * 50, m, NoiseConfig(scale=1.0))
    assert not any(ch in LINE_BREAKS for ch in out)
    assert len(out.splitlines()) == 1


def test_scaled_mass_cap():
    assert scaled_mass(0.2, 2.0) == 0.4
    assert scaled_mass(0.5, 3.0) == 0.95
    assert scaled_mass(0.97, 1.0) == 0.97
    assert scaled_mass(0.97, 2.0) == 0.97
    assert scaled_mass(1.5, 1.0) == 1.0


def test_cap_bounds_output_errors():
    out = apply_noise("a" * 2000, sub_only({"b": 0.9}), NoiseConfig(scale=100.0))
    assert 0.9 < out.count("b") / 2000 < 0.99


def test_determinism_and_seed(ocr_model, sample):
    cfg = NoiseConfig(seed=3, scale=2.0)
    a = noise_lines(sample, ocr_model, cfg)
    assert a == noise_lines(sample, ocr_model, cfg)
    assert a != noise_lines(sample, ocr_model, replace(cfg, seed=4))


def test_line_streams_are_independent(ocr_model, sample):
    cfg = NoiseConfig(seed=3, scale=2.0)
    full = noise_lines(sample, ocr_model, cfg)
    assert noise_lines(sample[10:20], ocr_model, cfg, offset=10) == full[10:20]
    assert noise_lines(sample, ocr_model, cfg, side=TARGET) != full


def test_noise_corpus_sides(ocr_model, sample):
    corpus = ParallelCorpus.from_lines(sample[:50], sample[50:100])
    assert noise_corpus(corpus, None, None, NoiseConfig(sides="none")).pairs == corpus.pairs
    src = noise_corpus(corpus, ocr_model, None, NoiseConfig(sides="source", scale=3.0))
    assert src.target_lines == corpus.target_lines
    assert src.source_lines != corpus.source_lines
    with pytest.raises(ValueError):
        noise_corpus(corpus, None, ocr_model, NoiseConfig(sides="both"))


def test_make_testsets(ocr_model, sample):
    corpus = ParallelCorpus.from_lines(sample[:40], sample[40:80])
    sets = make_testsets(corpus, ocr_model, ocr_model, NoiseConfig(scale=3.0))
    assert sets["cc"].pairs == corpus.pairs
    assert sets["cn"].source_lines == corpus.source_lines
    assert sets["nc"].target_lines == corpus.target_lines
    assert sets["nn"].source_lines == sets["nc"].source_lines
    assert sets["nn"].target_lines == sets["cn"].target_lines


def test_calibrate_zero(ocr_model, sample):
    assert calibrate_scale(ocr_model, sample, 0.0) == 0.0


def test_calibrate_self_consistent(ocr_model, sample):
    natural = measure_cer(sample, ocr_model, NoiseConfig(scale=1.0))
    scale = calibrate_scale(ocr_model, sample, natural)
    assert scale == pytest.approx(1.0, abs=0.1)


def test_calibrate_unreachable(sample):
    rare = NoiseModel(sub={"q": {"o": 0.01}}, char_counts={"q": 100})
    with pytest.raises(CalibrationError, match="unreachable: at most"):
        calibrate_scale(rare, sample, 10.0)


def test_calibrated_scale_reproduces(ocr_model, sample):
    cfg = NoiseConfig(seed=9)
    scale = calibrate_scale(ocr_model, sample, 6.0, cfg)
    noisy = noise_lines(sample, ocr_model, replace(cfg, scale=scale))
    assert compute_cer(zip(sample, noisy)).total_cer == pytest.approx(6.0, abs=0.3)


def test_parse_mixed():
    assert parse_mixed("2:0.5,5:0.5") == ([2.0, 5.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        parse_mixed("2-0.5")


def test_block_bounds():
    assert block_bounds(10, [1 / 3, 1 / 3, 1 / 3]) == [(0, 3), (3, 7), (7, 10)]


def test_mixed_blocks(ocr_model):
    lines = clean_lines(5, 900)
    corpus = ParallelCorpus.from_lines(lines, lines)
    targets = [2.0, 5.0, 10.0]
    cfg = NoiseConfig(sides="source")
    out = make_mixed_corpus(corpus, ocr_model, targets, [1 / 3, 1 / 3, 1 - 2 / 3], cfg)
    for (a, b), t in zip(block_bounds(900, [1 / 3] * 3), targets):
        pairs = zip(corpus.source_lines[a:b], out.source_lines[a:b])
        assert compute_cer(pairs).total_cer == pytest.approx(t, abs=0.5)


def test_mixed_single_block_matches_noise_corpus(ocr_model, sample):
    corpus = ParallelCorpus.from_lines(sample[:100], sample[100:200])
    cfg = NoiseConfig(seed=2)
    scales = []
    mixed = make_mixed_corpus(corpus, ocr_model, [5.0], [1.0], cfg, scales=scales)
    s_src = scales[0][2]
    s_tgt = scales[1][2]
    src = noise_corpus(corpus, ocr_model, None, replace(cfg, sides="source", scale=s_src))
    tgt = noise_corpus(corpus, None, ocr_model, replace(cfg, sides="target", scale=s_tgt))
    assert mixed.source_lines == src.source_lines
    assert mixed.target_lines == tgt.target_lines


def test_mixed_bad_shares(ocr_model, sample):
    corpus = ParallelCorpus.from_lines(sample[:10], sample[:10])
    with pytest.raises(ValueError, match="sum to 1"):
        make_mixed_corpus(corpus, ocr_model, [2, 5], [0.5, 0.6])


def test_cer_monotone_in_scale(ocr_model):
    lines = clean_lines(8, 400)
    cers = [measure_cer(lines, ocr_model, NoiseConfig(scale=s)) for s in (0, 0.5, 1, 2, 4)]
    assert cers == sorted(cers)


@given(st.text(alphabet="abc", max_size=30), st.floats(0, 5))
@settings(max_examples=100, deadline=None)
def test_unknown_characters_pass_through(line, scale):
    m = sub_only({"z": 1.0}, char="x")
    assert apply_noise(line, m, NoiseConfig(scale=scale)) == line


def test_bad_config():
    with pytest.raises(ValueError):
        NoiseConfig(scale=-1)
    with pytest.raises(ValueError):
        NoiseConfig(sides="left")
