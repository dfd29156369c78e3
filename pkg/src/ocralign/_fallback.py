"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and the same results; used when the extension is not built
or when ``OCRALIGN_PURE=1`` is set.
"""
import numpy as np

OP_MATCH, OP_SUB, OP_DEL, OP_INS = 0, 1, 2, 3


def edit_ops(a, b):
    a = a.tolist()
    b = b.tolist()
    n, m = len(a), len(b)
    d = [list(range(m + 1))]
    for i in range(1, n + 1):
        prev = d[-1]
        row = [i] * (m + 1)
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (ai != b[j - 1])
            x = prev[j] + 1
            if x < best:
                best = x
            x = row[j - 1] + 1
            if x < best:
                best = x
            row[j] = best
        d.append(row)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        x = d[i][j]
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and x == d[i - 1][j - 1]:
            ops.append(OP_MATCH)
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and x == d[i - 1][j - 1] + 1:
            ops.append(OP_SUB)
            i -= 1
            j -= 1
        elif i > 0 and x == d[i - 1][j] + 1:
            ops.append(OP_DEL)
            i -= 1
        else:
            ops.append(OP_INS)
            j -= 1
    ops.reverse()
    return np.array(ops, dtype=np.int8)


def edit_distance(a, b):
    a = a.tolist()
    b = b.tolist()
    prev = list(range(len(b) + 1))
    for i, ai in enumerate(a, 1):
        cur = [i] * (len(b) + 1)
        for j, bj in enumerate(b, 1):
            best = prev[j - 1] + (ai != bj)
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev = cur
    return prev[-1]


def estep(t, prior, t_idx, col_ptr, post):
    vals = np.asarray(t)[t_idx] * prior
    starts = col_ptr[:-1]
    if len(vals) == 0:
        return 0.0
    z = np.add.reduceat(vals, starts)
    # reduceat returns vals[start] for empty columns; zero them
    z[col_ptr[1:] == starts] = 0.0
    counts = np.diff(col_ptr)
    zz = np.repeat(z, counts)
    with np.errstate(divide="ignore", invalid="ignore"):
        post[:] = np.where(zz > 0.0, vals / np.where(zz > 0.0, zz, 1.0), vals)
    return float(np.log(z[z > 0.0]).sum())


def _pick(cum, lo, hi, r):
    for e in range(lo, hi):
        if r < cum[e]:
            return e
    return -1


def noise_line(codes, ctx, u, sub_ptr, sub_cum, sub_out, ins_ptr, ins_cum, ins_out, begin):
    codes = codes.tolist()
    ctx = ctx.tolist()
    u = u.tolist()
    sub_ptr = sub_ptr.tolist()
    sub_cum = sub_cum.tolist()
    sub_out = sub_out.tolist()
    ins_ptr = ins_ptr.tolist()
    ins_cum = ins_cum.tolist()
    ins_out = ins_out.tolist()
    out = []
    e = _pick(ins_cum, ins_ptr[begin], ins_ptr[begin + 1], u[0])
    if e >= 0:
        out.append(ins_out[e])
    for i, code in enumerate(codes):
        c = ctx[i]
        if c < 0:
            out.append(code)
            continue
        e = _pick(sub_cum, sub_ptr[c], sub_ptr[c + 1], u[1 + 2 * i])
        if e < 0:
            out.append(code)
        elif sub_out[e] >= 0:
            out.append(sub_out[e])
        e = _pick(ins_cum, ins_ptr[c], ins_ptr[c + 1], u[2 + 2 * i])
        if e >= 0:
            out.append(ins_out[e])
    return np.array(out, dtype=np.int32)
