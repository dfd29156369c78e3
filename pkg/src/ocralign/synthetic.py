"""Deterministic synthetic data: glossary corpora with known monotone gold,
an OCR-like character channel, and diagonal score matrices.

Used for the bundled toy fixture, tests and benchmarks.  The OCR channel
here is a fixed hand-written confusion process and does not go through
:mod:`ocralign.noiser`, so it can serve as the "real OCR" side of
round-trip experiments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bias import ScorePair
from .corpus import AlignmentSet, GoldAlignment, ParallelCorpus

LETTERS = "etaoinshrdlcumwfgypbvkjxqz"
# rough English letter frequencies, same order as LETTERS
LETTER_WEIGHTS = np.array([12.7, 9.1, 8.2, 7.5, 7.0, 6.7, 6.3, 6.1, 6.0, 4.3, 4.0, 2.8, 2.8,
                           2.4, 2.4, 2.2, 2.0, 2.0, 1.9, 1.5, 1.0, 0.8, 0.2, 0.2, 0.1, 0.1])
LETTER_WEIGHTS = LETTER_WEIGHTS / LETTER_WEIGHTS.sum()


def pseudo_words(rng: np.random.Generator, count: int, min_len: int = 3, max_len: int = 8,
                 letters: str = LETTERS, weights=LETTER_WEIGHTS) -> list:
    """``count`` distinct random words."""
    words, seen = [], set()
    while len(words) < count:
        n = int(rng.integers(min_len, max_len + 1))
        w = "".join(rng.choice(list(letters), size=n, p=weights))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def zipf_weights(n: int, exponent: float = 1.0, offset: float = 2.0) -> np.ndarray:
    w = 1.0 / (np.arange(n) + offset) ** exponent
    return w / w.sum()


def clean_lines(seed: int, n_lines: int, vocab_size: int = 500, min_words: int = 5,
                max_words: int = 15) -> list:
    """Lines of Zipf-distributed pseudo-words."""
    rng = np.random.default_rng(seed)
    vocab = pseudo_words(rng, vocab_size)
    p = zipf_weights(vocab_size)
    out = []
    for _ in range(n_lines):
        k = int(rng.integers(min_words, max_words + 1))
        out.append(" ".join(vocab[i] for i in rng.choice(vocab_size, size=k, p=p)))
    return out


@dataclass
class Glossary:
    source: list
    gloss: dict
    weights: np.ndarray


def make_glossary(rng: np.random.Generator, vocab_size: int = 200, two_word: float = 0.15,
                  dropped: float = 0.05) -> Glossary:
    """Source words mapped to 0, 1 or 2 target words."""
    src = pseudo_words(rng, vocab_size)
    tgt_pool = pseudo_words(rng, 2 * vocab_size, letters="aeioubdfgklmnprstvz",
                            weights=None)
    tgt_pool = [w for w in tgt_pool if w not in set(src)]
    gloss, k = {}, 0
    for w in src:
        r = rng.random()
        if r < dropped:
            gloss[w] = ()
        elif r < dropped + two_word:
            gloss[w] = (tgt_pool[k], tgt_pool[k + 1])
            k += 2
        else:
            gloss[w] = (tgt_pool[k],)
            k += 1
    return Glossary(src, gloss, zipf_weights(vocab_size, 0.8))


def glossary_corpus(seed: int, n_pairs: int, vocab_size: int = 200, min_len: int = 5,
                    max_len: int = 15, two_word: float = 0.15, dropped: float = 0.05):
    """Monotone word-by-word translations and their gold alignments.

    Returns ``(corpus, golds)``; all gold links are sure links.
    """
    rng = np.random.default_rng(seed)
    g = make_glossary(rng, vocab_size, two_word, dropped)
    src_lines, tgt_lines, golds = [], [], []
    while len(src_lines) < n_pairs:
        n = int(rng.integers(min_len, max_len + 1))
        words = [g.source[i] for i in rng.choice(vocab_size, size=n, p=g.weights)]
        tgt, links = [], []
        for i, w in enumerate(words):
            for t in g.gloss[w]:
                links.append((i, len(tgt)))
                tgt.append(t)
        if not tgt:
            continue
        src_lines.append(" ".join(words))
        tgt_lines.append(" ".join(tgt))
        golds.append(GoldAlignment.from_sure(links))
    return ParallelCorpus.from_lines(src_lines, tgt_lines), golds


# confusions typical of OCR on Latin script; whitespace is never touched
OCR_CONFUSIONS = {
    "e": ("c", "o"), "c": ("e",), "o": ("0", "c"), "l": ("1", "i"), "i": ("l", "1"),
    "n": ("u", "m"), "u": ("n", "v"), "m": ("n",), "h": ("b", "n"), "a": ("o", "e"),
    "s": ("5",), "t": ("f", "l"), "r": ("n",), "b": ("h",), "f": ("t",), "d": ("cl",),
}
OCR_INSERTS = ("'", ".", ",", "i", "l")


def ocr_channel(line: str, rng: np.random.Generator, sub_rate: float = 0.035,
                del_rate: float = 0.006, ins_rate: float = 0.006) -> str:
    """Corrupt ``line`` with OCR-style confusions (not via a NoiseModel)."""
    out = []
    for ch in line:
        if ch.isspace():
            out.append(ch)
            continue
        r = rng.random()
        if r < del_rate:
            pass
        elif r < del_rate + sub_rate and ch in OCR_CONFUSIONS:
            choices = OCR_CONFUSIONS[ch]
            out.append(choices[int(rng.integers(len(choices)))])
        else:
            out.append(ch)
        if rng.random() < ins_rate:
            out.append(OCR_INSERTS[int(rng.integers(len(OCR_INSERTS)))])
    return "".join(out)


def ocr_pairs(seed: int, n_lines: int, **rates) -> list:
    """(clean, noisy) line pairs from the OCR channel."""
    lines = clean_lines(seed, n_lines)
    rng = np.random.default_rng([seed, 1])
    return [(line, ocr_channel(line, rng, **rates)) for line in lines]


def diagonal_gold(n: int, m: int) -> AlignmentSet:
    """For each target j the source i whose cell centre is nearest."""
    return AlignmentSet((min(n - 1, int((j + 0.5) * n / m)), j) for j in range(m))


def diagonal_score_pairs(seed: int, count: int, min_len: int = 5, max_len: int = 15,
                         signal: float = 1.0, noise: float = 0.8):
    """Score matrices = ``signal`` on the diagonal gold + uniform noise.

    Returns ``(pairs, golds)``.
    """
    rng = np.random.default_rng(seed)
    pairs, golds = [], []
    for _ in range(count):
        n = int(rng.integers(min_len, max_len + 1))
        m = int(rng.integers(min_len, max_len + 1))
        gold = diagonal_gold(n, m)
        base = np.zeros((n, m))
        for i, j in gold:
            base[i, j] = signal
        fwd = base + rng.uniform(0.0, noise, size=(n, m))
        bwd = base.T + rng.uniform(0.0, noise, size=(m, n))
        pairs.append(ScorePair(fwd, bwd))
        golds.append(GoldAlignment.from_sure(gold))
    return pairs, golds


TOY_CONFIG = """\
# bundled toy run: 50 glossary pairs, OCR-like noise, diagonal Model 2
train_src = toy.src
train_tgt = toy.tgt
test_src = toy.src
test_tgt = toy.tgt
gold = toy.gold
ocr_clean = ocr.clean
ocr_noisy = ocr.noisy
out_dir = toy-out
seed = 20230707
target_cer = 5
sides = both
aligner = diag
iterations = 5
model1_iterations = 5
"""


def write_toy_fixture(directory, seed: int = 2023) -> None:
    """Write the toy corpus, gold, OCR pairs and ``toy.cfg`` into ``directory``."""
    import os

    from .corpus import save_parallel, write_gold, write_lines

    os.makedirs(directory, exist_ok=True)
    corpus, golds = glossary_corpus(seed, 50, vocab_size=60)
    save_parallel(corpus, os.path.join(directory, "toy.src"), os.path.join(directory, "toy.tgt"))
    write_gold(golds, os.path.join(directory, "toy.gold"))
    pairs = ocr_pairs(seed + 1, 300)
    write_lines([c for c, _ in pairs], os.path.join(directory, "ocr.clean"))
    write_lines([n for _, n in pairs], os.path.join(directory, "ocr.noisy"))
    with open(os.path.join(directory, "toy.cfg"), "w", encoding="utf-8") as fh:
        fh.write(TOY_CONFIG)
