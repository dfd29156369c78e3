"""Sentences, parallel corpora, alignment sets and their file formats.

Corpus files are UTF-8, one sentence per line.  Alignment files use the
Pharaoh convention: whitespace-separated ``i-j`` links with 0-based source
index ``i`` and target index ``j``.  Gold files additionally accept ``i?j``
for possible-only links.
"""
from __future__ import annotations

import os
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

Tokenizer = Callable[[str], list]

_LINK_RE = re.compile(r"^(\d+)([-?])(\d+)$")


class CorpusError(ValueError):
    """Malformed or inconsistent corpus / alignment input."""


def whitespace_tokenizer(line: str) -> list:
    return line.split()


@dataclass(frozen=True)
class Sentence:
    tokens: tuple
    raw: str

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)


def tokenize(line: str, tokenizer: Tokenizer = whitespace_tokenizer) -> Sentence:
    """Split ``line`` into tokens (maximal non-whitespace runs by default)."""
    return Sentence(tuple(tokenizer(line)), line)


@dataclass
class ParallelCorpus:
    pairs: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return ParallelCorpus(self.pairs[idx])
        return self.pairs[idx]

    @property
    def source_lines(self) -> list:
        return [s.raw for s, _ in self.pairs]

    @property
    def target_lines(self) -> list:
        return [t.raw for _, t in self.pairs]

    @classmethod
    def from_lines(cls, src_lines: Sequence[str], tgt_lines: Sequence[str],
                   tokenizer: Tokenizer = whitespace_tokenizer) -> "ParallelCorpus":
        if len(src_lines) != len(tgt_lines):
            raise CorpusError(f"line count mismatch {len(src_lines)} vs {len(tgt_lines)}")
        return cls([(tokenize(s, tokenizer), tokenize(t, tokenizer))
                    for s, t in zip(src_lines, tgt_lines)])

    def __add__(self, other: "ParallelCorpus") -> "ParallelCorpus":
        return ParallelCorpus(self.pairs + other.pairs)


@dataclass(frozen=True, order=True)
class AlignmentLink:
    src: int
    tgt: int


class AlignmentSet(frozenset):
    """A duplicate-free set of ``(src, tgt)`` index pairs."""

    def __new__(cls, links: Iterable = ()):
        return super().__new__(cls, ((int(i), int(j)) for i, j in links))

    def sorted(self) -> list:
        return sorted(self)

    def to_pharaoh(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in sorted(self))

    def __repr__(self) -> str:
        return f"AlignmentSet({sorted(self)!r})"


@dataclass(frozen=True)
class GoldAlignment:
    sure: AlignmentSet
    possible: AlignmentSet

    def __post_init__(self):
        # sure links are always possible
        object.__setattr__(self, "sure", AlignmentSet(self.sure))
        object.__setattr__(self, "possible", AlignmentSet(self.possible | self.sure))

    @classmethod
    def from_sure(cls, links: Iterable) -> "GoldAlignment":
        links = AlignmentSet(links)
        return cls(links, links)


def read_lines(path: str | os.PathLike, nfc: bool = False) -> list:
    """Read a UTF-8 file as a list of lines without terminators.

    Only LF terminates a line; a final LF does not open an empty line.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    out = []
    for lineno, raw in enumerate(lines, 1):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: invalid UTF-8 ({exc.reason})") from None
        out.append(unicodedata.normalize("NFC", text) if nfc else text)
    return out


def write_lines(lines: Iterable[str], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def load_parallel(src_path, tgt_path, tokenizer: Tokenizer = whitespace_tokenizer,
                  nfc: bool = False) -> ParallelCorpus:
    src = read_lines(src_path, nfc=nfc)
    tgt = read_lines(tgt_path, nfc=nfc)
    if len(src) != len(tgt):
        raise CorpusError(
            f"line count mismatch {len(src)} vs {len(tgt)} ({src_path}, {tgt_path})")
    return ParallelCorpus.from_lines(src, tgt, tokenizer)


def save_parallel(corpus: ParallelCorpus, src_path, tgt_path) -> None:
    write_lines(corpus.source_lines, src_path)
    write_lines(corpus.target_lines, tgt_path)


def _parse_links(line: str, lineno: int, path, allow_possible: bool, one_indexed: bool):
    sure, possible = [], []
    for token in line.split():
        m = _LINK_RE.match(token)
        if m is None or (m.group(2) == "?" and not allow_possible):
            raise CorpusError(f"{path}:{lineno}: malformed alignment token {token!r}")
        i, j = int(m.group(1)), int(m.group(3))
        if one_indexed:
            if i == 0 or j == 0:
                raise CorpusError(f"{path}:{lineno}: index 0 in one-indexed token {token!r}")
            i, j = i - 1, j - 1
        (sure if m.group(2) == "-" else possible).append((i, j))
    return sure, possible


def parse_alignment_line(line: str, one_indexed: bool = False) -> AlignmentSet:
    sure, _ = _parse_links(line, 1, "<string>", False, one_indexed)
    return AlignmentSet(sure)


def read_alignments(path, one_indexed: bool = False) -> list:
    """Read a Pharaoh alignment file, one :class:`AlignmentSet` per line."""
    result = []
    for lineno, line in enumerate(read_lines(path), 1):
        sure, _ = _parse_links(line, lineno, path, False, one_indexed)
        result.append(AlignmentSet(sure))
    return result


def read_gold(path, one_indexed: bool = False) -> list:
    """Read gold alignments: ``i-j`` is sure, ``i?j`` possible-only."""
    result = []
    for lineno, line in enumerate(read_lines(path), 1):
        sure, possible = _parse_links(line, lineno, path, True, one_indexed)
        result.append(GoldAlignment(AlignmentSet(sure), AlignmentSet(possible)))
    return result


def format_gold(gold: GoldAlignment) -> str:
    links = [(i, j, "-") for i, j in gold.sure]
    links += [(i, j, "?") for i, j in gold.possible - gold.sure]
    return " ".join(f"{i}{sep}{j}" for i, j, sep in sorted(links))


def write_alignments(sets: Iterable[AlignmentSet], path) -> None:
    write_lines((AlignmentSet(s).to_pharaoh() for s in sets), path)


def write_gold(golds: Iterable[GoldAlignment], path) -> None:
    write_lines((format_gold(g) for g in golds), path)
