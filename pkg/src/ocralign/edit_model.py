"""Character-level edit alignment, OCR noise model extraction and CER reports.

The noise model counts, over Levenshtein transcripts of clean/noisy line
pairs, how often each clean character is substituted (or deleted, which is
treated as substitution by the empty string) and how often a character is
inserted after each clean context character.  Insertions at the start of a
line use the context :data:`BEGIN`, whose count is the number of lines.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ._backend import kernels

BEGIN = "<begin>"
EPSILON = ""
MODEL_FORMAT = "ocralign-noise-model"
MODEL_VERSION = 1

MATCH, SUB, DEL, INS = "match", "sub", "del", "ins"
_KINDS = (MATCH, SUB, DEL, INS)


class ModelError(ValueError):
    """Noise model failed validation."""


def codepoints(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.int32)


def from_codepoints(codes) -> str:
    return np.asarray(codes, dtype=np.int32).tobytes().decode("utf-32-le")


def edit_codes(clean: str, noisy: str) -> np.ndarray:
    """Op codes (0 match, 1 sub, 2 del, 3 ins) of the clean -> noisy transcript."""
    return kernels.edit_ops(codepoints(clean), codepoints(noisy))


def edit_distance(a: str, b: str) -> int:
    return int(kernels.edit_distance(codepoints(a), codepoints(b)))


class EditOp(NamedTuple):
    """One transcript step.

    For ``ins`` ops ``clean`` holds the insertion context: the preceding
    clean character, or :data:`BEGIN`.
    """
    kind: str
    clean: str
    noisy: str


@dataclass
class EditScript:
    ops: list

    @property
    def counts(self) -> tuple:
        c = Counter(op.kind for op in self.ops)
        return c[MATCH], c[SUB], c[DEL], c[INS]

    @property
    def distance(self) -> int:
        _, s, d, i = self.counts
        return s + d + i

    def replay(self, clean: str) -> str:
        """Apply the script to ``clean``; raises if it does not fit."""
        out = []
        pos = 0
        for op in self.ops:
            if op.kind == INS:
                expected = clean[pos - 1] if pos else BEGIN
                if op.clean != expected:
                    raise ValueError(f"insertion context {op.clean!r} != {expected!r}")
                out.append(op.noisy)
                continue
            if pos >= len(clean) or clean[pos] != op.clean:
                raise ValueError(f"op {op} does not match clean text at {pos}")
            if op.kind != DEL:
                out.append(op.noisy)
            pos += 1
        if pos != len(clean):
            raise ValueError("script does not consume the whole clean string")
        return "".join(out)


def char_edit_alignment(clean: str, noisy: str) -> EditScript:
    """Minimum-edit transcript turning ``clean`` into ``noisy``.

    Ties are resolved match > substitute > delete > insert while tracing
    back from the end of both strings.
    """
    ops = []
    i = j = 0
    for code in edit_codes(clean, noisy).tolist():
        kind = _KINDS[code]
        if kind == INS:
            ops.append(EditOp(INS, clean[i - 1] if i else BEGIN, noisy[j]))
            j += 1
        elif kind == DEL:
            ops.append(EditOp(DEL, clean[i], EPSILON))
            i += 1
        else:
            ops.append(EditOp(kind, clean[i], noisy[j]))
            i += 1
            j += 1
    return EditScript(ops)


@dataclass
class NoiseModel:
    """Substitution/deletion and insertion probabilities per character.

    ``sub[c][d]`` is P(c -> d) with ``d == ""`` meaning deletion; the
    remaining mass of ``c`` is the no-error probability.  ``ins[k][d]`` is
    the probability that ``d`` is inserted after context ``k``; the row sum
    is the total insertion probability of ``k``.  ``char_counts`` holds the
    denominators (``char_counts[BEGIN]`` is the number of lines).
    """
    sub: dict = field(default_factory=dict)
    ins: dict = field(default_factory=dict)
    char_counts: dict = field(default_factory=dict)

    def sub_mass(self, c: str) -> float:
        return math.fsum(self.sub.get(c, {}).values())

    def p_noerror(self, c: str) -> float:
        return max(0.0, 1.0 - self.sub_mass(c))

    def p_sub(self, c: str, d: str) -> float:
        return self.sub.get(c, {}).get(d, 0.0)

    def ins_prob(self, context: str) -> float:
        return sum(self.ins.get(context, {}).values())

    def p_ins(self, context: str, d: str) -> float:
        return self.ins.get(context, {}).get(d, 0.0)

    @property
    def alphabet(self) -> list:
        chars = set(self.sub) | set(self.ins) | set(self.char_counts)
        chars.discard(BEGIN)
        return sorted(chars)

    def validate(self) -> "NoiseModel":
        _validate_counts(self.char_counts)
        for c, row in self.sub.items():
            path = f"sub[{c!r}]"
            _check_char(c, path)
            if not isinstance(row, dict):
                raise ModelError(f"{path}: expected an object")
            for d, p in row.items():
                if d != EPSILON:
                    _check_char(d, f"{path}[{d!r}]")
                if d == c:
                    raise ModelError(f"{path}[{d!r}]: identity is not an error outcome")
                _check_prob(p, f"{path}[{d!r}]")
            total = math.fsum(row.values())
            if total > 1.0 + 1e-9:
                raise ModelError(f"{path}: probabilities sum to {total!r} > 1")
        for k, row in self.ins.items():
            path = f"ins[{k!r}]"
            if k != BEGIN:
                _check_char(k, path)
            if not isinstance(row, dict):
                raise ModelError(f"{path}: expected an object")
            for d, p in row.items():
                _check_char(d, f"{path}[{d!r}]")
                # rates, not probabilities: several insertions may follow one k
                _check_prob(p, f"{path}[{d!r}]", upper=math.inf)
        return self

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "begin_token": BEGIN,
            "char_counts": dict(sorted(self.char_counts.items())),
            "sub": {c: dict(sorted(row.items())) for c, row in sorted(self.sub.items())},
            "ins": {k: dict(sorted(row.items())) for k, row in sorted(self.ins.items())},
        }

    @classmethod
    def from_dict(cls, data) -> "NoiseModel":
        if not isinstance(data, dict):
            raise ModelError("<root>: expected an object")
        if data.get("format") != MODEL_FORMAT:
            raise ModelError(f"format: expected {MODEL_FORMAT!r}, got {data.get('format')!r}")
        if data.get("version") != MODEL_VERSION:
            raise ModelError(f"version: unsupported {data.get('version')!r}")
        if data.get("begin_token", BEGIN) != BEGIN:
            raise ModelError(f"begin_token: expected {BEGIN!r}")
        for key in ("char_counts", "sub", "ins"):
            if not isinstance(data.get(key), dict):
                raise ModelError(f"{key}: missing or not an object")
        model = cls(sub={c: dict(row) if isinstance(row, dict) else row
                         for c, row in data["sub"].items()},
                    ins={k: dict(row) if isinstance(row, dict) else row
                         for k, row in data["ins"].items()},
                    char_counts=dict(data["char_counts"]))
        return model.validate()


def _check_char(c, path):
    if not isinstance(c, str) or len(c) != 1:
        raise ModelError(f"{path}: expected a single character, got {c!r}")


def _check_prob(p, path, upper=1.0):
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p) \
            or p < 0.0 or p > upper:
        raise ModelError(f"{path}: expected a value in [0, {upper}], got {p!r}")


def _validate_counts(counts):
    for c, n in counts.items():
        path = f"char_counts[{c!r}]"
        if c != BEGIN:
            _check_char(c, path)
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ModelError(f"{path}: expected a non-negative integer, got {n!r}")


def save_model(model: NoiseModel, path) -> None:
    text = json.dumps(model.to_dict(), ensure_ascii=False, indent=1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def load_model(path) -> NoiseModel:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from None
    try:
        return NoiseModel.from_dict(data)
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from None


@dataclass
class EditCounts:
    """Integer statistics accumulated over transcripts."""
    chars: Counter = field(default_factory=Counter)
    sub: defaultdict = field(default_factory=lambda: defaultdict(Counter))
    ins: defaultdict = field(default_factory=lambda: defaultdict(Counter))
    lines: int = 0
    matches: int = 0
    subs: int = 0
    dels: int = 0
    inss: int = 0

    def add(self, clean: str, noisy: str) -> None:
        self.lines += 1
        self.chars.update(clean)
        i = j = 0
        for code in edit_codes(clean, noisy).tolist():
            if code == 0:
                self.matches += 1
                i += 1
                j += 1
            elif code == 1:
                self.subs += 1
                self.sub[clean[i]][noisy[j]] += 1
                i += 1
                j += 1
            elif code == 2:
                self.dels += 1
                self.sub[clean[i]][EPSILON] += 1
                i += 1
            else:
                self.inss += 1
                self.ins[clean[i - 1] if i else BEGIN][noisy[j]] += 1
                j += 1

    @property
    def edits(self) -> int:
        return self.subs + self.dels + self.inss

    @property
    def clean_chars(self) -> int:
        return sum(self.chars.values())


def count_edits(pairs: Iterable) -> EditCounts:
    counts = EditCounts()
    for clean, noisy in pairs:
        counts.add(clean, noisy)
    return counts


def extract_noise_model(pairs: Sequence) -> NoiseModel:
    """Estimate a :class:`NoiseModel` from (clean, noisy) line pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ModelError("cannot extract a noise model from an empty pair list")
    counts = count_edits(pairs)
    char_counts = dict(counts.chars)
    char_counts[BEGIN] = counts.lines
    sub = {c: {d: n / counts.chars[c] for d, n in row.items()}
           for c, row in counts.sub.items()}
    ins = {k: {d: n / char_counts[k] for d, n in row.items()}
           for k, row in counts.ins.items()}
    return NoiseModel(sub=sub, ins=ins, char_counts=char_counts)


@dataclass(frozen=True)
class CerReport:
    total_cer: float
    sub_share: float
    ins_share: float
    del_share: float
    chars: int
    matches: int
    subs: int
    dels: int
    inss: int

    @property
    def edits(self) -> int:
        return self.subs + self.dels + self.inss

    @property
    def sub_del_share(self) -> float:
        """Substitution share with deletions counted as substitutions."""
        return self.sub_share + self.del_share

    @classmethod
    def from_counts(cls, counts: EditCounts) -> "CerReport":
        chars = counts.clean_chars
        if chars == 0:
            raise ModelError("CER undefined: clean side has no characters")
        edits = counts.edits

        def share(n):
            return 100.0 * n / edits if edits else 0.0

        return cls(100.0 * edits / chars, share(counts.subs), share(counts.inss),
                   share(counts.dels), chars, counts.matches, counts.subs,
                   counts.dels, counts.inss)

    def as_table(self, label: str = "corpus") -> str:
        header = f"{'Language':<12}{'Total CER':>10}{'Sub. %':>9}{'Del. %':>9}" \
                 f"{'Ins. %':>9}{'Sub.+Del. %':>13}"
        row = f"{label:<12}{self.total_cer:>10.1f}{self.sub_share:>9.1f}" \
              f"{self.del_share:>9.1f}{self.ins_share:>9.1f}{self.sub_del_share:>13.1f}"
        return header + "\n" + row

    def as_kv(self) -> str:
        items = [("total_cer", self.total_cer), ("sub_share", self.sub_share),
                 ("del_share", self.del_share), ("ins_share", self.ins_share),
                 ("chars", self.chars), ("matches", self.matches), ("subs", self.subs),
                 ("dels", self.dels), ("inss", self.inss), ("edits", self.edits)]
        return "\n".join(f"{k}={v!r}" for k, v in items)


def compute_cer(pairs: Sequence) -> CerReport:
    """Corpus CER: total edit distance over total clean characters, in percent."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot compute CER of an empty pair list")
    return CerReport.from_counts(count_edits(pairs))
