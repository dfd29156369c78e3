import numpy as np
import pytest

from ocralign.aligners import (AlignerError, DiagonalPrior, align_corpus, load_aligner,
                               log_likelihood, save_aligner, train, train_diag_model2,
                               train_ibm1, train_ibm2, viterbi_align)
from ocralign.corpus import ParallelCorpus, tokenize
from ocralign.evaluation import evaluate
from ocralign.synthetic import glossary_corpus
from oracles import ibm1_reference

TOY = [("la maison", "the house"), ("la", "the")]


def corpus_of(pairs):
    return ParallelCorpus.from_lines(*zip(*pairs))


@pytest.fixture(scope="module")
def toy():
    return corpus_of(TOY)


@pytest.fixture(scope="module")
def gloss():
    return glossary_corpus(4, 300, vocab_size=80)


def test_one_iteration_by_hand(toy):
    # uniform 1/2 start; the(la) collects 1/3 + 1/2, house(la) 1/3
    m = train_ibm1(toy, 1)
    assert m.translation.prob("la", "the") == pytest.approx(5 / 7, abs=1e-15)
    assert m.translation.prob("maison", "house") == pytest.approx(0.5, abs=1e-15)
    assert m.log_likelihoods[0] == pytest.approx(np.log(0.125), abs=1e-15)


def test_matches_reference_em(toy):
    m = train_ibm1(toy, 10)
    ref, history = ibm1_reference(TOY, 10)
    for (e, f), p in ref.items():
        assert m.translation.prob(None if e == "<null>" else e, f) == pytest.approx(p, abs=1e-9)
    np.testing.assert_allclose(m.log_likelihoods[:10], history, atol=1e-9)
    assert m.translation.prob("la", "the") > 0.8
    assert m.translation.prob("la", "the") > m.translation.prob("la", "house")


def test_single_cooccurrence():
    m = train_ibm1(corpus_of([("a", "x")]), 7)
    assert m.translation.prob("a", "x") == 1.0
    assert m.translation.prob(None, "x") == 1.0


def test_rows_normalised(gloss):
    m = train_ibm1(gloss[0], 3)
    np.testing.assert_allclose(m.translation.row_sums(), 1.0, atol=1e-9)


def test_log_likelihood_monotone(gloss):
    for model in (train_ibm1(gloss[0], 8), train_ibm2(gloss[0], 8)):
        h = model.log_likelihoods
        assert all(b >= a - 1e-9 for a, b in zip(h, h[1:]))


def test_final_history_entry_matches_log_likelihood(toy):
    m = train_ibm1(toy, 4)
    assert log_likelihood(m, toy) == pytest.approx(m.log_likelihoods[-1], abs=1e-9)


def test_viterbi_toy(toy):
    m = train_ibm1(toy, 10)
    assert viterbi_align(m, (tokenize("la maison"), tokenize("the house"))) == {(0, 0), (1, 1)}
    assert viterbi_align(m, (tokenize("la"), tokenize(""))) == set()
    assert viterbi_align(m, (tokenize("zz yy"), tokenize("qq"))) == set()


def test_ibm2_distortion_diagonal():
    corpus, _ = glossary_corpus(6, 400, vocab_size=60, two_word=0.0, dropped=0.0)
    m = train(corpus, "ibm2", iterations=10)
    dist = m.distortion
    seen = {(j, n) for (i, j, n, mm) in dist.table if n == mm}
    assert seen
    for j, n in seen:
        col = dist.column(j, n, n)
        assert int(np.argmax(col)) - 1 == j


def test_ibm2_columns_normalised(gloss):
    m = train_ibm2(gloss[0], 3)
    for total in m.distortion.group_sums().values():
        assert total == pytest.approx(1.0, abs=1e-9)


def test_ibm2_degenerate_single_token():
    # t(x|a) = t(x|NULL) = 1, so the posterior never leaves the uniform split
    m = train_ibm2(corpus_of([("a", "x")] * 3), 5)
    assert m.distortion.prob(0, 0, 1, 1) == pytest.approx(0.5)
    assert m.distortion.prob(-1, 0, 1, 1) == pytest.approx(0.5)


def test_model1_init_helps(gloss):
    m1 = train_ibm1(gloss[0], 5)
    warm = train_ibm2(gloss[0], 1, init=m1)
    cold = train_ibm2(gloss[0], 1)
    assert warm.log_likelihoods[0] >= cold.log_likelihoods[0]


def test_small_tension_uniform_null_matches_model1(gloss):
    m1 = train_ibm1(gloss[0], 5)
    d = train_diag_model2(gloss[0], 5, DiagonalPrior(tension=1e-12, null_prob=None))
    np.testing.assert_allclose(d.translation.probs, m1.translation.probs, atol=1e-6)


def test_diag_prior_column():
    col = DiagonalPrior(4.0, 0.08).column(0, 3, 3)
    assert col[0] == 0.08
    assert col.sum() == pytest.approx(1.0)
    assert np.argmax(col[1:]) == 0
    assert DiagonalPrior(4.0, None).column(1, 4, 2)[0] == pytest.approx(0.2)
    with pytest.raises(AlignerError):
        DiagonalPrior(tension=0.0)


def test_diag_beats_model1_on_monotone(gloss):
    corpus, golds = gloss
    aer = {k: evaluate(align_corpus(train(corpus, k), corpus), golds).aer
           for k in ("ibm1", "diag")}
    assert aer["diag"] <= aer["ibm1"]


def test_errors(toy):
    with pytest.raises(AlignerError):
        train_ibm1(ParallelCorpus([]), 3)
    with pytest.raises(AlignerError):
        train_ibm1(toy, 0)
    with pytest.raises(AlignerError):
        train(toy, "ibm3")


@pytest.mark.parametrize("kind", ["ibm1", "ibm2", "diag"])
def test_save_load_round_trip(tmp_path, gloss, kind):
    corpus = gloss[0][:60]
    m = train(corpus, kind, iterations=2, model1_iterations=2)
    save_aligner(m, tmp_path / "m")
    back = load_aligner(tmp_path / "m")
    assert back.kind == kind
    assert align_corpus(back, corpus) == align_corpus(m, corpus)
    save_aligner(back, tmp_path / "m2")
    assert (tmp_path / "m").read_bytes() == (tmp_path / "m2").read_bytes()


def test_lowercase(toy):
    m = train_ibm1(toy, 5, lowercase=True)
    assert viterbi_align(m, (tokenize("LA Maison"), tokenize("The HOUSE"))) == {(0, 0), (1, 1)}
