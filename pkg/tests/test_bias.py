import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ocralign.bias import (BiasError, ScorePair, build_bias_matrix, extract_alignment,
                           parse_matrix_file, read_matrix_file, rescore, rescore_corpus,
                           rescore_pairs,
                           write_matrix_file)
from ocralign.corpus import write_alignments
from ocralign.evaluation import evaluate
from ocralign.synthetic import diagonal_score_pairs

shapes = st.tuples(st.integers(1, 8), st.integers(1, 8))
matrices = shapes.flatmap(lambda s: arrays(np.float64, s, elements=st.floats(0, 10)))


def test_closed_form():
    b = build_bias_matrix(2, 2, 4.0)
    assert b[0, 1] == pytest.approx(math.exp(-2), abs=1e-12)
    assert b[0, 1] == pytest.approx(0.135335, abs=1e-6)
    assert build_bias_matrix(1, 1).tolist() == [[1.0]]


@given(st.integers(1, 12), st.floats(0.1, 20))
def test_square_diagonal_is_one(n, tension):
    assert np.allclose(np.diag(build_bias_matrix(n, n, tension)), 1.0)


@given(st.integers(1, 12), st.integers(1, 12))
def test_transpose_and_reversal_symmetry(n, m):
    b = build_bias_matrix(n, m)
    assert np.allclose(build_bias_matrix(m, n), b.T)
    assert np.allclose(b[::-1, ::-1], b)
    assert np.all((b > 0) & (b <= 1))


def test_bias_errors():
    with pytest.raises(BiasError):
        build_bias_matrix(0, 3)
    with pytest.raises(BiasError):
        rescore(np.array([[np.nan]]), 0.5)
    with pytest.raises(BiasError):
        rescore(np.ones((2, 2)), 1.5)


@given(matrices)
@settings(max_examples=100)
def test_lambda_zero_identity(a):
    out = rescore(a, 0.0)
    assert out.tobytes() == np.ascontiguousarray(a, dtype=np.float64).tobytes()


def test_uniform_matrix_peaks_on_diagonal():
    out = rescore(np.ones((5, 5)), 1.0)
    assert list(np.argmax(out, axis=1)) == list(range(5))


@given(st.floats(0, 1), st.floats(0.01, 5))
def test_scalar_case(lam, v):
    assert rescore([[v]], lam)[0, 0] == pytest.approx((1 - lam) * v + lam * v * v)


def test_printed_formula_swaps():
    a = np.arange(1.0, 7.0).reshape(2, 3)
    assert np.allclose(rescore(a, 0.3, formula="printed"), rescore(a, 0.7))


def test_extract_examples():
    eye = np.eye(3)
    assert extract_alignment(eye, eye, 0.5) == {(0, 0), (1, 1), (2, 2)}
    assert extract_alignment(np.zeros((2, 3)), np.zeros((3, 2))) == set()
    full = extract_alignment(np.ones((2, 3)), np.ones((3, 2)), 0.0)
    assert full == {(i, j) for i in range(2) for j in range(3)}
    with pytest.raises(BiasError):
        extract_alignment(np.ones((2, 3)), np.ones((2, 3)))


def test_matrix_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pairs = [ScorePair(rng.random((n, m)), rng.random((m, n))) for n, m in [(2, 3), (1, 1)]]
    write_matrix_file(pairs, tmp_path / "m")
    back = read_matrix_file(tmp_path / "m")
    for p, q in zip(pairs, back):
        assert np.array_equal(p.src2tgt, q.src2tgt)
        assert np.array_equal(p.tgt2src, q.tgt2src)


def test_malformed_block_index():
    text = "1 1\n0.5\n0.5\n\n2 2\n1 0\n0 1\n1 0\n"
    with pytest.raises(BiasError, match="block 1"):
        list(parse_matrix_file(text.splitlines()))


def test_rescore_corpus_passthrough(tmp_path):
    rng = np.random.default_rng(2)
    pairs = [ScorePair(rng.random((4, 5)), rng.random((5, 4))) for _ in range(5)]
    write_matrix_file(pairs, tmp_path / "m")
    rescore_corpus(tmp_path / "m", 0.0, output=tmp_path / "a")
    write_alignments([extract_alignment(p.src2tgt, p.tgt2src) for p in pairs], tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
    rescore_corpus(tmp_path / "m", 0.7, output=tmp_path / "c")
    rescore_corpus(tmp_path / "m", 0.7, output=tmp_path / "d")
    assert (tmp_path / "c").read_bytes() == (tmp_path / "d").read_bytes()


def test_bias_direction_on_monotone_matrices():
    pairs, gold = diagonal_score_pairs(5, 100)
    aer = {lam: evaluate(rescore_pairs(pairs, lam), gold).aer for lam in (0.0, 1.0)}
    assert aer[1.0] <= aer[0.0]


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_argmax_preserved_under_scaling(lam):
    a = np.random.default_rng(1).random((4, 6))
    assert np.array_equal(np.argmax(rescore(a, lam), axis=1),
                          np.argmax(rescore(7.5 * a, lam), axis=1))


@given(matrices, st.floats(0, 1))
@settings(max_examples=100)
def test_rescore_bounds(a, lam):
    out = rescore(a, lam)
    assert np.all(out >= 0)
    assert np.all(out <= a.max() * max(1.0, a.mean()) + 1e-9)
