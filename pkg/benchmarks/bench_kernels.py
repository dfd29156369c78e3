"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from ocralign._backend import compiled, fallback
from ocralign.aligners import _EM
from ocralign.edit_model import codepoints, extract_noise_model
from ocralign.noiser import CompiledNoise
from ocralign.synthetic import glossary_corpus, ocr_pairs


def edit_case():
    pairs = [(codepoints(c), codepoints(n)) for c, n in ocr_pairs(1, 300)]

    def run(k):
        for a, b in pairs:
            k.edit_ops(a, b)
    return "edit_ops (300 lines)", run


def estep_case():
    corpus, _ = glossary_corpus(1, 1000)
    em = _EM(corpus, False)
    prior = em.prep.uniform_prior()
    post = np.empty(len(prior))

    def run(k):
        k.estep(em.t, prior, em.prep.t_idx, em.prep.col_ptr, post)
    return f"estep ({len(prior)} entries)", run


def noise_case():
    pairs = ocr_pairs(2, 300)
    cn = CompiledNoise(extract_noise_model(pairs), scale=2.0)
    rng = np.random.default_rng(0)
    inputs = []
    for clean, _ in pairs:
        codes = codepoints(clean)
        ctx = np.array([cn.index.get(ch, -1) for ch in clean], dtype=np.int32)
        inputs.append((codes, ctx, rng.random(2 * len(clean) + 1)))

    def run(k):
        for codes, ctx, u in inputs:
            k.noise_line(codes, ctx, u, cn.sub_ptr, cn.sub_cum, cn.sub_out, cn.ins_ptr,
                         cn.ins_cum, cn.ins_out, cn.begin)
    return "noise_line (300 lines)", run


def best_of(fn, kernels, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(kernels)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", fallback)] + ([("compiled", compiled)] if compiled else [])
    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for make in (edit_case, estep_case, noise_case):
        label, fn = make()
        times = [best_of(fn, k, args.repeat) for _, k in backends]
        speedup = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else f"{'-':>10}"
        print(f"{label:<28}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + speedup)
    if compiled is None:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
