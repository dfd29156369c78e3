"""Independent reference implementations used as test oracles.

Written from the textbook definitions without touching package internals.
"""
import math
from fractions import Fraction


def levenshtein(a, b):
    """Distance-only Wagner-Fischer over full rows."""
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def backtrace_ops(a, b):
    """Full table + backtrace with the preference match > sub > del > ins."""
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    ops, i, j = [], n, m
    while i or j:
        if i and j and a[i - 1] == b[j - 1] and d[i][j] == d[i - 1][j - 1]:
            ops.append("match"); i -= 1; j -= 1
        elif i and j and d[i][j] == d[i - 1][j - 1] + 1:
            ops.append("sub"); i -= 1; j -= 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            ops.append("del"); i -= 1
        else:
            ops.append("ins"); j -= 1
    return ops[::-1]


def all_transcripts(a, b):
    """Every edit transcript from a to b (exponential; tiny inputs only)."""
    if not a and not b:
        return [[]]
    out = []
    if a and b:
        kind = "match" if a[0] == b[0] else "sub"
        out += [[kind] + t for t in all_transcripts(a[1:], b[1:])]
    if a:
        out += [["del"] + t for t in all_transcripts(a[1:], b)]
    if b:
        out += [["ins"] + t for t in all_transcripts(a, b[1:])]
    return out


def ibm1_reference(pairs, iterations):
    """Dictionary-based Model 1 EM with NULL; uniform init over co-occurrences."""
    corpus = [(["<null>"] + s.split(), t.split()) for s, t in pairs]
    cooc = {}
    for src, tgt in corpus:
        for e in src:
            cooc.setdefault(e, set()).update(tgt)
    t = {(e, f): 1.0 / len(fs) for e, fs in cooc.items() for f in fs}
    history = []
    for _ in range(iterations):
        count, total, ll = {}, {}, 0.0
        for src, tgt in corpus:
            for f in tgt:
                z = sum(t[(e, f)] for e in src)
                ll += math.log(z / len(src))
                for e in src:
                    c = t[(e, f)] / z
                    count[(e, f)] = count.get((e, f), 0.0) + c
                    total[e] = total.get(e, 0.0) + c
        t = {k: count[k] / total[k[0]] for k in t}
        history.append(ll)
    return t, history


def aer_fraction(a, s, p):
    """Exact (precision, recall, AER) in percent as Fractions for one corpus."""
    a_s = sum(len(x & y) for x, y in zip(a, s))
    a_p = sum(len(x & y) for x, y in zip(a, p))
    na, ns = sum(map(len, a)), sum(map(len, s))
    prec = Fraction(100 * a_p, na) if na else Fraction(0)
    rec = Fraction(100 * a_s, ns) if ns else Fraction(0)
    aer = 100 - Fraction(100 * (a_s + a_p), na + ns) if na + ns else Fraction(0)
    return prec, rec, aer
