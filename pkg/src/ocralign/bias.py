"""Diagonal structural bias for soft alignment score matrices.

Score matrices come from an external aligner (for example dumped attention
scores).  Rescoring blends the raw scores with a diagonally weighted copy::

    prose:   A' = (1 - lam) * A + lam * (A * M_b) * mean(A)
    printed: A' = lam * A + (1 - lam) * (A * M_b) * mean(A)

``*`` is the entrywise product.  With the default ``prose`` form ``lam = 0``
leaves the scores untouched and ``lam = 1`` applies the full bias.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .aligners import DEFAULT_TENSION, diagonal_weight
from .corpus import AlignmentSet, write_alignments

DEFAULT_THRESHOLD = 1e-3
FORMULAS = ("prose", "printed")


class BiasError(ValueError):
    pass


def build_bias_matrix(n: int, m: int, tension: float = DEFAULT_TENSION) -> np.ndarray:
    """n x m matrix with entry (i, j) = exp(-tension * |(i+.5)/n - (j+.5)/m|)."""
    if n < 1 or m < 1:
        raise BiasError(f"bias matrix needs n, m >= 1, got {n}x{m}")
    if not tension > 0 or not math.isfinite(tension):
        raise BiasError(f"tension must be a positive finite number, got {tension!r}")
    return diagonal_weight(np.arange(n)[:, None], np.arange(m)[None, :], n, m, tension)


def _check_scores(scores) -> np.ndarray:
    a = np.asarray(scores, dtype=np.float64)
    if a.ndim != 2 or 0 in a.shape:
        raise BiasError(f"score matrix must be 2-D and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise BiasError("score matrix has non-finite entries")
    if np.any(a < 0):
        raise BiasError("score matrix has negative entries")
    return a


def rescore(scores, lam: float, tension: float = DEFAULT_TENSION,
            formula: str = "prose") -> np.ndarray:
    if not 0.0 <= lam <= 1.0:
        raise BiasError(f"lambda must be in [0, 1], got {lam!r}")
    if formula not in FORMULAS:
        raise BiasError(f"formula must be one of {FORMULAS}, got {formula!r}")
    a = _check_scores(scores)
    keep = 1.0 - lam if formula == "prose" else lam
    if keep == 1.0:
        return a.copy()
    biased = a * build_bias_matrix(*a.shape, tension) * a.mean()
    if keep == 0.0:
        return biased
    return keep * a + (1.0 - keep) * biased


def _normalise(a: np.ndarray, axis: int) -> np.ndarray:
    sums = a.sum(axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(sums > 0, a / np.where(sums > 0, sums, 1.0), 0.0)


def extract_alignment(src2tgt, tgt2src, threshold: float = DEFAULT_THRESHOLD) -> AlignmentSet:
    """Links whose row-normalised src->tgt and column-normalised tgt->src
    probabilities both exceed ``threshold``.

    ``src2tgt`` is n x m, ``tgt2src`` is m x n.
    """
    a = _check_scores(src2tgt)
    b = _check_scores(tgt2src)
    if b.shape != a.shape[::-1]:
        raise BiasError(f"dimension mismatch: {a.shape} vs {b.shape}")
    fwd = _normalise(a, axis=1)
    bwd = _normalise(b.T, axis=0)
    ii, jj = np.nonzero((fwd > threshold) & (bwd > threshold))
    return AlignmentSet(zip(ii.tolist(), jj.tolist()))


@dataclass
class ScorePair:
    src2tgt: np.ndarray
    tgt2src: np.ndarray


def parse_matrix_file(lines: Iterable[str], name: str = "<matrices>") -> Iterator[ScorePair]:
    """Parse blank-line separated blocks: header ``n m``, then n rows of m
    floats (source -> target) and m rows of n floats (target -> source)."""
    block: list = []
    index = 0
    for line in list(lines) + [""]:
        if line.strip():
            block.append(line)
            continue
        if block:
            yield _parse_block(block, index, name)
            index += 1
            block = []


def _parse_block(block, index, name):
    try:
        header = block[0].split()
        if len(header) != 2:
            raise ValueError("header must be 'n m'")
        n, m = int(header[0]), int(header[1])
        if n < 1 or m < 1:
            raise ValueError(f"bad dimensions {n} {m}")
        if len(block) != 1 + n + m:
            raise ValueError(f"expected {n + m} rows, found {len(block) - 1}")
        fwd = np.array([[float(x) for x in row.split()] for row in block[1:1 + n]])
        bwd = np.array([[float(x) for x in row.split()] for row in block[1 + n:]])
        if fwd.shape != (n, m) or bwd.shape != (m, n):
            raise ValueError(f"row lengths do not match header {n} {m}")
        _check_scores(fwd)
        _check_scores(bwd)
    except (ValueError, BiasError) as exc:
        raise BiasError(f"{name}: block {index}: {exc}") from None
    return ScorePair(fwd, bwd)


def read_matrix_file(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return list(parse_matrix_file(fh.read().split("\n"), str(path)))


def format_block(pair: ScorePair) -> str:
    n, m = pair.src2tgt.shape
    rows = [f"{n} {m}"]
    rows += [" ".join(repr(float(x)) for x in row) for row in pair.src2tgt]
    rows += [" ".join(repr(float(x)) for x in row) for row in pair.tgt2src]
    return "\n".join(rows)


def write_matrix_file(pairs: Iterable[ScorePair], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n\n".join(format_block(p) for p in pairs) + "\n")


def rescore_pairs(pairs: Iterable[ScorePair], lam: float, tension: float = DEFAULT_TENSION,
                  threshold: float = DEFAULT_THRESHOLD, formula: str = "prose") -> list:
    return [extract_alignment(rescore(p.src2tgt, lam, tension, formula),
                              rescore(p.tgt2src, lam, tension, formula), threshold)
            for p in pairs]


def rescore_corpus(matrix_file, lam: float, tension: float = DEFAULT_TENSION,
                   threshold: float = DEFAULT_THRESHOLD, output=None,
                   formula: str = "prose") -> list:
    """Rescore every block of ``matrix_file`` and write Pharaoh alignments."""
    sets = rescore_pairs(read_matrix_file(matrix_file), lam, tension, threshold, formula)
    if output is not None:
        write_alignments(sets, output)
    return sets
