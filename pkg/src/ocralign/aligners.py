"""IBM Model 1, IBM Model 2 and a diagonal-prior Model 2 trained with EM.

Alignment direction: every target word is generated by one source word or
by NULL.  Internally the corpus is flattened into *entries*, one per
(target position, source position incl. NULL); the entries of one target
position form a contiguous column, which is what the E-step kernel walks.

NULL has source index -1.  Links to NULL are never emitted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .corpus import AlignmentSet, ParallelCorpus, Sentence

PROB_FLOOR = 1e-12
DEFAULT_ITERATIONS = 5
DEFAULT_TENSION = 4.0
DEFAULT_NULL_PROB = 0.08
KINDS = ("ibm1", "ibm2", "diag")
MODEL_HEADER = "#ocralign-alignment-model 1"


class AlignerError(ValueError):
    pass


def diagonal_weight(i, j, n, m, tension):
    """exp(-tension * |pos_i - pos_j|) on cell-centred relative positions."""
    return np.exp(-tension * np.abs((np.asarray(i) + 0.5) / n - (np.asarray(j) + 0.5) / m))


@dataclass(frozen=True)
class DiagonalPrior:
    """Fixed monotone distortion: NULL gets ``null_prob`` (``None``: the
    uniform share ``1/(n+1)``), real words share the rest in proportion to
    :func:`diagonal_weight`.
    """
    tension: float = DEFAULT_TENSION
    null_prob: float | None = DEFAULT_NULL_PROB

    def __post_init__(self):
        if not self.tension > 0.0 or not math.isfinite(self.tension):
            raise AlignerError(f"tension must be finite and > 0, got {self.tension!r}")
        if self.null_prob is not None and not 0.0 <= self.null_prob < 1.0:
            raise AlignerError(f"null_prob must be in [0, 1), got {self.null_prob!r}")

    def column(self, j: int, n: int, m: int) -> np.ndarray:
        """Probabilities for source positions -1 (NULL), 0..n-1 at target j."""
        w = diagonal_weight(np.arange(n), j, n, m, self.tension)
        p0 = 1.0 / (n + 1) if self.null_prob is None else self.null_prob
        return np.concatenate(([p0], (1.0 - p0) * w / w.sum()))


class TranslationTable:
    """t(target | source) over vocabulary ids; source id 0 is NULL."""

    def __init__(self, src_vocab: list, tgt_vocab: list, pairs: np.ndarray, probs: np.ndarray):
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.pairs = pairs
        self.probs = probs
        self.src_index = {w: k for k, w in enumerate(src_vocab) if k}
        self.tgt_index = {w: k for k, w in enumerate(tgt_vocab)}
        self._lookup = {(int(s), int(t)): float(p) for (s, t), p in zip(pairs, probs)}

    def __len__(self):
        return len(self.probs)

    def get_ids(self, s: int, t: int, default: float = 0.0) -> float:
        return self._lookup.get((s, t), default)

    def prob(self, src: str | None, tgt: str, default: float = 0.0) -> float:
        """t(tgt | src); ``src=None`` is NULL."""
        s = 0 if src is None else self.src_index.get(src)
        t = self.tgt_index.get(tgt)
        if s is None or t is None:
            return default
        return self._lookup.get((s, t), default)

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.pairs[:, 0], weights=self.probs, minlength=len(self.src_vocab))


class DistortionTable:
    """d(i | j, n, m) keyed by ``(i, j, n, m)``, ``i = -1`` for NULL."""

    def __init__(self, table: dict):
        self.table = table

    def __len__(self):
        return len(self.table)

    def prob(self, i: int, j: int, n: int, m: int, default: float | None = None) -> float:
        p = self.table.get((i, j, n, m))
        if p is None:
            return 1.0 / (n + 1) if default is None else default
        return p

    def column(self, j, n, m) -> np.ndarray:
        return np.array([self.prob(i, j, n, m) for i in range(-1, n)])

    def group_sums(self) -> dict:
        sums = {}
        for (i, j, n, m), p in self.table.items():
            sums[(j, n, m)] = sums.get((j, n, m), 0.0) + p
        return sums


@dataclass
class AlignmentModel:
    kind: str
    translation: TranslationTable
    distortion: DistortionTable | None = None
    prior: DiagonalPrior | None = None
    lowercase: bool = False
    iterations: int = 0
    log_likelihoods: list = field(default_factory=list)

    def prepare(self, sentence: Sentence) -> list:
        return [w.lower() for w in sentence.tokens] if self.lowercase else list(sentence.tokens)

    def column_prior(self, j: int, n: int, m: int) -> np.ndarray:
        if self.kind == "ibm1":
            return np.full(n + 1, 1.0 / (n + 1))
        if self.kind == "ibm2":
            return self.distortion.column(j, n, m)
        return self.prior.column(j, n, m)

    def scores(self, src: Sequence[str], tgt: Sequence[str]) -> np.ndarray:
        """(n+1) x m matrix of t * a; row 0 is NULL."""
        tt = self.translation
        s_ids = [0] + [tt.src_index.get(w, -1) for w in src]
        out = np.empty((len(src) + 1, len(tgt)))
        for j, w in enumerate(tgt):
            t_id = tt.tgt_index.get(w, -1)
            col = np.array([tt.get_ids(s, t_id, PROB_FLOOR) for s in s_ids])
            out[:, j] = np.maximum(col, PROB_FLOOR) * self.column_prior(j, len(src), len(tgt))
        return out


# --- corpus flattening -----------------------------------------------------

class _Prepared:
    """Flattened entry arrays for one corpus and a fixed vocabulary."""

    def __init__(self, sentences, src_vocab, tgt_vocab, pair_index):
        src_index = {w: k for k, w in enumerate(src_vocab) if k}
        tgt_index = {w: k for k, w in enumerate(tgt_vocab)}
        t_idx, ent_i, col_j, col_n, col_m, col_ptr = [], [], [], [], [], [0]
        for src, tgt in sentences:
            s_ids = [0] + [src_index[w] for w in src]
            n, m = len(src), len(tgt)
            for j, w in enumerate(tgt):
                t_id = tgt_index[w]
                t_idx.extend(pair_index[(s, t_id)] for s in s_ids)
                ent_i.extend(range(-1, n))
                col_j.append(j)
                col_n.append(n)
                col_m.append(m)
                col_ptr.append(len(t_idx))
        self.t_idx = np.array(t_idx, dtype=np.int64)
        self.ent_i = np.array(ent_i, dtype=np.int64)
        self.col_ptr = np.array(col_ptr, dtype=np.int64)
        self.col_j = np.array(col_j, dtype=np.int64)
        self.col_n = np.array(col_n, dtype=np.int64)
        self.col_m = np.array(col_m, dtype=np.int64)
        widths = np.diff(self.col_ptr)
        self.ent_j = np.repeat(self.col_j, widths)
        self.ent_n = np.repeat(self.col_n, widths)
        self.ent_m = np.repeat(self.col_m, widths)

    def uniform_prior(self) -> np.ndarray:
        return 1.0 / (self.ent_n + 1.0)

    def diagonal_prior(self, prior: DiagonalPrior) -> np.ndarray:
        out = np.empty(len(self.t_idx))
        cache = {}
        for c in range(len(self.col_j)):
            key = (int(self.col_j[c]), int(self.col_n[c]), int(self.col_m[c]))
            col = cache.get(key)
            if col is None:
                col = cache[key] = prior.column(*key)
            out[self.col_ptr[c]:self.col_ptr[c + 1]] = col
        return out


def _sentences(corpus: ParallelCorpus, lowercase: bool) -> list:
    if lowercase:
        return [([w.lower() for w in s.tokens], [w.lower() for w in t.tokens])
                for s, t in corpus.pairs]
    return [(list(s.tokens), list(t.tokens)) for s, t in corpus.pairs]


def _build_vocab(sentences):
    src_vocab, tgt_vocab = [None], []
    src_seen, tgt_seen = set(), set()
    for src, tgt in sentences:
        for w in src:
            if w not in src_seen:
                src_seen.add(w)
                src_vocab.append(w)
        for w in tgt:
            if w not in tgt_seen:
                tgt_seen.add(w)
                tgt_vocab.append(w)
    return src_vocab, tgt_vocab


def _cooccurrences(sentences, src_vocab, tgt_vocab):
    src_index = {w: k for k, w in enumerate(src_vocab) if k}
    tgt_index = {w: k for k, w in enumerate(tgt_vocab)}
    pair_index = {}
    for src, tgt in sentences:
        s_ids = [0] + [src_index[w] for w in src]
        for w in tgt:
            t_id = tgt_index[w]
            for s in s_ids:
                if (s, t_id) not in pair_index:
                    pair_index[(s, t_id)] = len(pair_index)
    pairs = np.array(list(pair_index), dtype=np.int64).reshape(-1, 2)
    return pair_index, pairs


class _EM:
    """Shared EM state: translation table over co-occurring pairs."""

    def __init__(self, corpus: ParallelCorpus, lowercase: bool):
        if len(corpus) == 0:
            raise AlignerError("cannot train on an empty corpus")
        self.sentences = _sentences(corpus, lowercase)
        self.src_vocab, self.tgt_vocab = _build_vocab(self.sentences)
        self.pair_index, self.pairs = _cooccurrences(self.sentences, self.src_vocab,
                                                     self.tgt_vocab)
        self.prep = _Prepared(self.sentences, self.src_vocab, self.tgt_vocab, self.pair_index)
        self.nsrc = len(self.src_vocab)
        self.post = np.empty(len(self.prep.t_idx))
        if len(self.pairs):
            fanout = np.bincount(self.pairs[:, 0], minlength=self.nsrc)
            self.t = 1.0 / fanout[self.pairs[:, 0]]
        else:
            self.t = np.zeros(0)

    def init_from(self, table: TranslationTable):
        """Copy probabilities of ``table`` where defined, then renormalise."""
        old_src = {w: k for k, w in enumerate(table.src_vocab)}
        old_tgt = table.tgt_index
        t = np.empty(len(self.pairs))
        for k, (s, tg) in enumerate(self.pairs):
            s_old = old_src.get(self.src_vocab[s]) if s else 0
            t_old = old_tgt.get(self.tgt_vocab[tg])
            p = table.get_ids(s_old, t_old, 0.0) if s_old is not None and t_old is not None else 0.0
            t[k] = max(p, PROB_FLOOR)
        self.t = self._normalise_t(t)

    def _normalise_t(self, counts):
        totals = np.bincount(self.pairs[:, 0], weights=counts, minlength=self.nsrc)
        t = counts / totals[self.pairs[:, 0]]
        return np.maximum(t, PROB_FLOOR)

    def estep(self, prior) -> float:
        if len(self.post) == 0:
            return 0.0
        return float(kernels.estep(self.t, prior, self.prep.t_idx, self.prep.col_ptr, self.post))

    def mstep_t(self):
        counts = np.bincount(self.prep.t_idx, weights=self.post, minlength=len(self.pairs))
        self.t = self._normalise_t(counts)

    def table(self) -> TranslationTable:
        return TranslationTable(self.src_vocab, self.tgt_vocab, self.pairs, self.t.copy())


def _check_iterations(iterations):
    if not isinstance(iterations, int) or iterations < 1:
        raise AlignerError(f"iterations must be a positive integer, got {iterations!r}")


def train_ibm1(corpus: ParallelCorpus, iterations: int = DEFAULT_ITERATIONS,
               lowercase: bool = False) -> AlignmentModel:
    """IBM Model 1 from uniform initialisation.

    ``log_likelihoods[k]`` is the corpus log-likelihood under the
    parameters entering iteration ``k``; the last entry is for the final
    parameters.
    """
    _check_iterations(iterations)
    em = _EM(corpus, lowercase)
    prior = em.prep.uniform_prior()
    history = []
    for _ in range(iterations):
        history.append(em.estep(prior))
        em.mstep_t()
    history.append(em.estep(prior))
    return AlignmentModel("ibm1", em.table(), lowercase=lowercase, iterations=iterations,
                          log_likelihoods=history)


class _DistortionState:
    def __init__(self, prep: _Prepared):
        keys = {}
        d_idx = np.empty(len(prep.t_idx), dtype=np.int64)
        for e, key in enumerate(zip(prep.ent_i.tolist(), prep.ent_j.tolist(),
                                    prep.ent_n.tolist(), prep.ent_m.tolist())):
            k = keys.get(key)
            if k is None:
                k = keys[key] = len(keys)
            d_idx[e] = k
        self.keys = list(keys)
        groups = {}
        self.group = np.array([groups.setdefault(k[1:], len(groups)) for k in self.keys],
                              dtype=np.int64)
        self.d_idx = d_idx
        self.d = np.array([1.0 / (k[2] + 1) for k in self.keys])

    def prior(self) -> np.ndarray:
        return self.d[self.d_idx]

    def mstep(self, post):
        counts = np.bincount(self.d_idx, weights=post, minlength=len(self.keys))
        totals = np.bincount(self.group, weights=counts)
        self.d = np.maximum(counts / totals[self.group], PROB_FLOOR)

    def table(self) -> DistortionTable:
        return DistortionTable({k: float(p) for k, p in zip(self.keys, self.d)})


def train_ibm2(corpus: ParallelCorpus, iterations: int = DEFAULT_ITERATIONS,
               init: TranslationTable | AlignmentModel | None = None,
               lowercase: bool = False) -> AlignmentModel:
    """IBM Model 2; the translation table starts from ``init`` when given."""
    _check_iterations(iterations)
    em = _EM(corpus, lowercase)
    if init is not None:
        em.init_from(init.translation if isinstance(init, AlignmentModel) else init)
    dist = _DistortionState(em.prep)
    history = []
    for _ in range(iterations):
        history.append(em.estep(dist.prior()))
        em.mstep_t()
        dist.mstep(em.post)
    history.append(em.estep(dist.prior()))
    return AlignmentModel("ibm2", em.table(), distortion=dist.table(), lowercase=lowercase,
                          iterations=iterations, log_likelihoods=history)


def train_diag_model2(corpus: ParallelCorpus, iterations: int = DEFAULT_ITERATIONS,
                      prior: DiagonalPrior = DiagonalPrior(),
                      init: TranslationTable | AlignmentModel | None = None,
                      lowercase: bool = False) -> AlignmentModel:
    """Model 2 with a fixed diagonal distortion; only t is learned."""
    _check_iterations(iterations)
    em = _EM(corpus, lowercase)
    if init is not None:
        em.init_from(init.translation if isinstance(init, AlignmentModel) else init)
    a = em.prep.diagonal_prior(prior)
    history = []
    for _ in range(iterations):
        history.append(em.estep(a))
        em.mstep_t()
    history.append(em.estep(a))
    return AlignmentModel("diag", em.table(), prior=prior, lowercase=lowercase,
                          iterations=iterations, log_likelihoods=history)


def train(corpus: ParallelCorpus, kind: str = "ibm1", iterations: int = DEFAULT_ITERATIONS,
          model1_iterations: int | None = None, tension: float = DEFAULT_TENSION,
          null_prob: float | None = DEFAULT_NULL_PROB, lowercase: bool = False
          ) -> AlignmentModel:
    """Train ``kind``; Model 2 variants are initialised from Model 1.

    ``model1_iterations`` defaults to ``DEFAULT_ITERATIONS`` for the Model 1
    stage (set 0 to skip it).
    """
    if kind not in KINDS:
        raise AlignerError(f"unknown aligner {kind!r}; expected one of {KINDS}")
    if kind == "ibm1":
        return train_ibm1(corpus, iterations, lowercase)
    m1_iters = DEFAULT_ITERATIONS if model1_iterations is None else model1_iterations
    init = train_ibm1(corpus, m1_iters, lowercase) if m1_iters else None
    if kind == "ibm2":
        return train_ibm2(corpus, iterations, init, lowercase)
    return train_diag_model2(corpus, iterations, DiagonalPrior(tension, null_prob), init,
                             lowercase)


# --- inference -------------------------------------------------------------

def viterbi_align(model: AlignmentModel, pair: tuple) -> AlignmentSet:
    """Best source position per target word; NULL links are dropped.

    Among real words ties go to the smaller index.  A real word also wins a
    tie with NULL, unless its translation probability is only the floor
    given to unseen pairs.
    """
    src, tgt = pair
    src = model.prepare(src) if isinstance(src, Sentence) else list(src)
    tgt = model.prepare(tgt) if isinstance(tgt, Sentence) else list(tgt)
    if not tgt or not src:
        return AlignmentSet()
    scores = model.scores(src, tgt)
    best = np.argmax(scores[1:], axis=0)
    cols = np.arange(len(tgt))
    real = scores[1 + best, cols]
    tt = model.translation
    seen = [tt.get_ids(tt.src_index.get(src[i], -1), tt.tgt_index.get(w, -1)) > PROB_FLOOR
            for i, w in zip(best.tolist(), tgt)]
    keep = (real > scores[0]) | ((real == scores[0]) & np.array(seen))
    return AlignmentSet((int(best[j]), j) for j in cols.tolist() if keep[j])


def align_corpus(model: AlignmentModel, corpus: ParallelCorpus) -> list:
    return [viterbi_align(model, pair) for pair in corpus.pairs]


def log_likelihood(model: AlignmentModel, corpus: ParallelCorpus) -> float:
    """Corpus log-likelihood sum_j log sum_i t * a (unseen pairs floored)."""
    total = 0.0
    for s, t in corpus.pairs:
        src, tgt = model.prepare(s), model.prepare(t)
        if tgt:
            total += float(np.log(model.scores(src, tgt).sum(axis=0)).sum())
    return total


# --- serialisation ---------------------------------------------------------

def save_aligner(model: AlignmentModel, path) -> None:
    tt = model.translation
    for w in tt.src_vocab[1:] + tt.tgt_vocab:
        if not w or any(ch.isspace() for ch in w):
            raise AlignerError(f"token {w!r} cannot be serialised (empty or contains whitespace)")
    lines = [MODEL_HEADER, f"kind {model.kind}", f"lowercase {int(model.lowercase)}",
             f"iterations {model.iterations}"]
    if model.prior is not None:
        lines.append(f"tension {model.prior.tension!r}")
        p0 = model.prior.null_prob
        lines.append(f"null_prob {'uniform' if p0 is None else repr(p0)}")
    lines.append(f"src_vocab {len(tt.src_vocab) - 1}")
    lines.extend(tt.src_vocab[1:])
    lines.append(f"tgt_vocab {len(tt.tgt_vocab)}")
    lines.extend(tt.tgt_vocab)
    lines.append(f"translation {len(tt)}")
    lines.extend(f"{s} {t} {p!r}" for (s, t), p in zip(tt.pairs.tolist(), tt.probs.tolist()))
    if model.distortion is not None:
        lines.append(f"distortion {len(model.distortion)}")
        lines.extend(f"{i} {j} {n} {m} {p!r}"
                     for (i, j, n, m), p in sorted(model.distortion.table.items()))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_aligner(path) -> AlignmentModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    pos = 0

    def take(key):
        nonlocal pos
        if pos >= len(lines):
            raise AlignerError(f"{path}: unexpected end of file, expected {key!r}")
        parts = lines[pos].split(" ", 1)
        if parts[0] != key or len(parts) != 2:
            raise AlignerError(f"{path}:{pos + 1}: expected {key!r}, got {lines[pos]!r}")
        pos += 1
        return parts[1]

    def block(n):
        nonlocal pos
        if pos + n > len(lines):
            raise AlignerError(f"{path}: truncated block at line {pos + 1}")
        out = lines[pos:pos + n]
        pos += n
        return out

    if not lines or lines[0] != MODEL_HEADER:
        raise AlignerError(f"{path}: not an alignment model file")
    pos = 1
    try:
        kind = take("kind")
        if kind not in KINDS:
            raise AlignerError(f"{path}: unknown kind {kind!r}")
        lowercase = bool(int(take("lowercase")))
        iterations = int(take("iterations"))
        prior = None
        if kind == "diag":
            tension = float(take("tension"))
            p0 = take("null_prob")
            prior = DiagonalPrior(tension, None if p0 == "uniform" else float(p0))
        src_vocab = [None] + block(int(take("src_vocab")))
        tgt_vocab = block(int(take("tgt_vocab")))
        rows = [r.split() for r in block(int(take("translation")))]
        pairs = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64).reshape(-1, 2)
        probs = np.array([float(r[2]) for r in rows])
        distortion = None
        if kind == "ibm2":
            drows = [r.split() for r in block(int(take("distortion")))]
            distortion = DistortionTable({(int(a), int(b), int(c), int(d)): float(p)
                                          for a, b, c, d, p in drows})
    except (ValueError, IndexError) as exc:
        if isinstance(exc, AlignerError):
            raise
        raise AlignerError(f"{path}:{pos}: malformed model file ({exc})") from None
    if len(pairs) and (pairs[:, 0].max() >= len(src_vocab) or pairs[:, 1].max() >= len(tgt_vocab)):
        raise AlignerError(f"{path}: translation entry refers to an unknown vocabulary id")
    table = TranslationTable(src_vocab, tgt_vocab, pairs, probs)
    return AlignmentModel(kind, table, distortion=distortion, prior=prior,
                          lowercase=lowercase, iterations=iterations)
