"""Precision, recall and alignment error rate against sure/possible gold.

All metrics are micro-averaged: intersection and set sizes are summed over
the corpus before the ratios are taken.  With predicted links A, sure links
S and possible links P (S is a subset of P)::

    precision = |A & P| / |A|
    recall    = |A & S| / |S|
    AER       = 1 - (|A & S| + |A & P|) / (|A| + |S|)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import AlignmentSet, GoldAlignment
from .edit_model import compute_cer


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class SentenceCounts:
    a: int
    s: int
    p: int
    a_s: int
    a_p: int


@dataclass
class EvalReport:
    precision: float
    recall: float
    aer: float
    a: int
    s: int
    p: int
    a_s: int
    a_p: int
    flags: tuple = ()
    per_sentence: list = field(default_factory=list)

    def as_text(self) -> str:
        lines = [f"{'precision':<10}{self.precision:>7.1f}",
                 f"{'recall':<10}{self.recall:>7.1f}",
                 f"{'AER':<10}{self.aer:>7.1f}",
                 f"{'|A|':<10}{self.a:>7d}",
                 f"{'|S|':<10}{self.s:>7d}",
                 f"{'|P|':<10}{self.p:>7d}",
                 f"{'|A&S|':<10}{self.a_s:>7d}",
                 f"{'|A&P|':<10}{self.a_p:>7d}"]
        if self.flags:
            lines.append(f"{'flags':<10}{','.join(self.flags):>7}")
        for k, c in enumerate(self.per_sentence):
            r = _rates(c)
            lines.append(f"sent {k:<5}P={r[0]:5.1f} R={r[1]:5.1f} AER={r[2]:5.1f} "
                         f"|A|={c.a} |S|={c.s} |P|={c.p}")
        return "\n".join(lines)

    def as_kv(self) -> str:
        items = [("precision", self.precision), ("recall", self.recall), ("aer", self.aer),
                 ("a", self.a), ("s", self.s), ("p", self.p), ("a_and_s", self.a_s),
                 ("a_and_p", self.a_p), ("flags", ",".join(self.flags))]
        out = [f"{k}={v!r}" if not isinstance(v, str) else f"{k}={v}" for k, v in items]
        for k, c in enumerate(self.per_sentence):
            r = _rates(c)
            out.append(f"sentence.{k}=precision:{r[0]!r},recall:{r[1]!r},aer:{r[2]!r},"
                       f"a:{c.a},s:{c.s},p:{c.p},a_and_s:{c.a_s},a_and_p:{c.a_p}")
        return "\n".join(out)


def _rates(c):
    precision = 100.0 * c.a_p / c.a if c.a else 0.0
    recall = 100.0 * c.a_s / c.s if c.s else 0.0
    aer = 100.0 * (1.0 - (c.a_s + c.a_p) / (c.a + c.s)) if c.a + c.s else 0.0
    return precision, recall, aer


def sentence_counts(pred: AlignmentSet, gold: GoldAlignment) -> SentenceCounts:
    pred = AlignmentSet(pred)
    return SentenceCounts(len(pred), len(gold.sure), len(gold.possible),
                          len(pred & gold.sure), len(pred & gold.possible))


def evaluate(pred: Sequence[AlignmentSet], gold: Sequence[GoldAlignment],
             per_sentence: bool = False) -> EvalReport:
    """Corpus-level precision/recall/AER in percent.

    Undefined ratios are reported as 0 with a flag: ``no_predictions``
    (|A| = 0), ``no_sure_links`` (|S| = 0), ``empty`` (|A| + |S| = 0).
    """
    if len(pred) != len(gold):
        raise EvalError(f"prediction/gold length mismatch: {len(pred)} vs {len(gold)}")
    rows = [sentence_counts(a, g) for a, g in zip(pred, gold)]
    total = SentenceCounts(*(sum(getattr(r, f) for r in rows)
                             for f in ("a", "s", "p", "a_s", "a_p")))
    flags = []
    if total.a == 0:
        flags.append("no_predictions")
    if total.s == 0:
        flags.append("no_sure_links")
    if total.a + total.s == 0:
        flags.append("empty")
    precision, recall, aer = _rates(total)
    return EvalReport(precision, recall, aer, total.a, total.s, total.p, total.a_s,
                      total.a_p, tuple(flags), rows if per_sentence else [])


def count_links(pred: Sequence[AlignmentSet]) -> int:
    return sum(len(AlignmentSet(a)) for a in pred)


@dataclass(frozen=True)
class CerDiffRow:
    label: str
    real: float
    synthetic: float

    @property
    def diff(self) -> float:
        return abs(self.real - self.synthetic)


def cer_diff_report(real_pairs, synth_pairs, label: str = "corpus") -> CerDiffRow:
    """Real vs synthetic CER for one corpus."""
    return CerDiffRow(label, compute_cer(real_pairs).total_cer,
                      compute_cer(synth_pairs).total_cer)


def format_cer_diff(rows: Sequence[CerDiffRow]) -> str:
    out = [f"{'Language':<12}{'Real CER':>9}{'Syn. CER':>10}{'Diff.':>7}"]
    out += [f"{r.label:<12}{r.real:>9.1f}{r.synthetic:>10.1f}{r.diff:>7.1f}" for r in rows]
    return "\n".join(out)
