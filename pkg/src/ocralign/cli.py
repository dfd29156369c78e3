"""Command line interface.

Exit codes: 0 success, 1 invalid arguments/configuration, 2 data or
runtime error.  Results go to stdout, logs to stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import __version__
from .aligners import (DEFAULT_ITERATIONS, DEFAULT_NULL_PROB, DEFAULT_TENSION, KINDS,
                       AlignerError, align_corpus, load_aligner, save_aligner, train)
from .bias import DEFAULT_THRESHOLD, FORMULAS, BiasError, rescore_corpus
from .corpus import CorpusError, ParallelCorpus, load_parallel, read_alignments, read_gold, \
    read_lines, write_alignments, write_lines
from .edit_model import ModelError, compute_cer, extract_noise_model, load_model, save_model
from .evaluation import EvalError, count_links, evaluate
from .noiser import (DEFAULT_SEED, SIDES, SOURCE, TARGET, CalibrationError, NoiseConfig,
                     calibrate_scale, make_mixed_corpus, make_testsets, noise_corpus, parse_mixed)
from .pipeline import (ConfigError, StageError, apply_overrides, config_from_manifest,
                       load_config, noise_with_scales, run_pipeline)

log = logging.getLogger("ocralign")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _existing(path):
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    return path


def _noise_args(p, sides_default="both"):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scale", type=float, default=1.0,
                   help="multiplier on all error probabilities")
    g.add_argument("--target-cer", type=float, help="calibrate the scale to this CER (%%)")
    g.add_argument("--mixed-cer", help="blocks at several CERs, e.g. 2:0.33,5:0.33,10:0.34")
    p.add_argument("--sides", choices=SIDES, default=sides_default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ocralign",
                     description="OCR noise models, noisy parallel data and word alignment.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract-noise", help="estimate a noise model from clean/OCR pairs")
    p.add_argument("clean")
    p.add_argument("noisy")
    p.add_argument("out_model")
    p.add_argument("--report", choices=("table", "kv", "both"), default="both")
    p.add_argument("--label", default="corpus")
    p.add_argument("--nfc", action="store_true")

    p = sub.add_parser("apply-noise", help="noise a corpus (or a single file)")
    p.add_argument("--src")
    p.add_argument("--tgt")
    p.add_argument("--src-model")
    p.add_argument("--tgt-model")
    p.add_argument("--out-src")
    p.add_argument("--out-tgt")
    _noise_args(p)

    p = sub.add_parser("make-testsets", help="write clean/noisy test set variants")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--src-model", required=True)
    p.add_argument("--tgt-model")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--target-cer", type=float)

    p = sub.add_parser("train", help="train a word aligner")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--aligner", choices=KINDS, default="ibm1")
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--model1-iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--tension", type=float, default=DEFAULT_TENSION)
    p.add_argument("--null-prob", default=str(DEFAULT_NULL_PROB),
                   help="NULL probability of the diagonal model, or 'uniform'")
    p.add_argument("--lowercase", action="store_true")

    p = sub.add_parser("align", help="Viterbi alignments with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out")

    p = sub.add_parser("rescore", help="diagonal-bias rescoring of score matrices")
    p.add_argument("matrices")
    p.add_argument("--out")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--tension", type=float, default=DEFAULT_TENSION)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--formula", choices=FORMULAS, default="prose")

    p = sub.add_parser("evaluate", help="precision / recall / AER")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("--machine-readable", action="store_true")
    p.add_argument("--one-indexed", action="store_true", help="gold file uses 1-based indices")

    p = sub.add_parser("pipeline", help="extract -> noise -> train -> align -> evaluate")
    p.add_argument("config", nargs="?")
    p.add_argument("--manifest", help="rerun the configuration recorded in a manifest")
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key")
    return parser


def _cmd_extract_noise(args):
    clean = read_lines(_existing(args.clean), nfc=args.nfc)
    noisy = read_lines(_existing(args.noisy), nfc=args.nfc)
    if len(clean) != len(noisy):
        raise CorpusError(f"line count mismatch {len(clean)} vs {len(noisy)} "
                          f"({args.clean}, {args.noisy})")
    pairs = list(zip(clean, noisy))
    model = extract_noise_model(pairs)
    save_model(model, args.out_model)
    report = compute_cer(pairs)
    if args.report in ("table", "both"):
        print(report.as_table(args.label))
    if args.report in ("kv", "both"):
        print(report.as_kv())


def _scales_for(args, models, corpus, config):
    if args.target_cer is None:
        return None
    lines = {SOURCE: corpus.source_lines, TARGET: corpus.target_lines}
    return {side: calibrate_scale(models[side], lines[side], args.target_cer, config, side)
            for side in config.side_ids}


def _cmd_apply_noise(args):
    if not args.src and not args.tgt:
        raise UsageError("give --src and/or --tgt")
    src = read_lines(_existing(args.src)) if args.src else None
    tgt = read_lines(_existing(args.tgt)) if args.tgt else None
    if src is None:
        src = [""] * len(tgt)
    if tgt is None:
        tgt = [""] * len(src)
    corpus = ParallelCorpus.from_lines(src, tgt)
    sides = args.sides
    if not args.tgt and sides == "both":
        sides = "source"
    if not args.src and sides == "both":
        sides = "target"
    config = NoiseConfig(seed=args.seed, scale=args.scale, sides=sides)
    models = {SOURCE: load_model(_existing(args.src_model)) if args.src_model else None,
              TARGET: load_model(_existing(args.tgt_model)) if args.tgt_model else None}
    if models[TARGET] is None and sides == "both":
        models[TARGET] = models[SOURCE]
    for side in config.side_ids:
        if models[side] is None:
            raise UsageError(f"--sides {sides} needs --{'src' if side == SOURCE else 'tgt'}-model")
    if args.mixed_cer:
        targets, shares = parse_mixed(args.mixed_cer)
        noisy = make_mixed_corpus(corpus, models[SOURCE] or models[TARGET], targets, shares,
                                  config, tgt_model=models[TARGET])
    elif args.target_cer is not None:
        noisy = noise_with_scales(corpus, models, _scales_for(args, models, corpus, config),
                                  config)
    else:
        noisy = noise_corpus(corpus, models[SOURCE], models[TARGET], config)
    if args.src:
        _emit(noisy.source_lines, args.out_src)
    if args.tgt:
        _emit(noisy.target_lines, args.out_tgt)


def _emit(lines, path):
    if path:
        write_lines(lines, path)
    else:
        sys.stdout.write("".join(line + "\n" for line in lines))


def _cmd_make_testsets(args):
    corpus = load_parallel(_existing(args.src), _existing(args.tgt))
    src_model = load_model(_existing(args.src_model))
    tgt_model = load_model(_existing(args.tgt_model)) if args.tgt_model else src_model
    src_name, tgt_name = os.path.basename(args.src), os.path.basename(args.tgt)
    if src_name == tgt_name:
        raise UsageError("source and target files need different base names")
    config = NoiseConfig(seed=args.seed, scale=args.scale, sides="both")
    models = {SOURCE: src_model, TARGET: tgt_model}
    scales = _scales_for(args, models, corpus, config)
    if scales is None:
        sets = make_testsets(corpus, src_model, tgt_model, config)
    else:
        noisy = noise_with_scales(corpus, models, scales, config)
        sets = {name: ParallelCorpus([(ns if s else cs, nt if t else ct)
                                      for (cs, ct), (ns, nt) in zip(corpus.pairs, noisy.pairs)])
                for name, s, t in (("cc", 0, 0), ("cn", 0, 1), ("nc", 1, 0), ("nn", 1, 1))}
    os.makedirs(args.out_dir, exist_ok=True)
    for name, c in sets.items():
        write_lines(c.source_lines, os.path.join(args.out_dir, f"{src_name}.{name}"))
        write_lines(c.target_lines, os.path.join(args.out_dir, f"{tgt_name}.{name}"))
        print(f"{name}\t{os.path.join(args.out_dir, src_name + '.' + name)}\t"
              f"{os.path.join(args.out_dir, tgt_name + '.' + name)}")


def _cmd_train(args):
    corpus = load_parallel(_existing(args.src), _existing(args.tgt))
    null_prob = None if args.null_prob == "uniform" else float(args.null_prob)
    model = train(corpus, args.aligner, args.iterations, args.model1_iterations, args.tension,
                  null_prob, args.lowercase)
    save_aligner(model, args.out)
    print(f"loglik={model.log_likelihoods[-1]!r}")


def _cmd_align(args):
    model = load_aligner(_existing(args.model))
    corpus = load_parallel(_existing(args.src), _existing(args.tgt))
    sets = align_corpus(model, corpus)
    if args.out:
        write_alignments(sets, args.out)
    else:
        sys.stdout.write("".join(s.to_pharaoh() + "\n" for s in sets))


def _cmd_rescore(args):
    sets = rescore_corpus(_existing(args.matrices), args.lam, args.tension, args.threshold,
                          args.out, args.formula)
    if not args.out:
        sys.stdout.write("".join(s.to_pharaoh() + "\n" for s in sets))


def _cmd_evaluate(args):
    pred = read_alignments(_existing(args.pred))
    gold = read_gold(_existing(args.gold), one_indexed=args.one_indexed)
    report = evaluate(pred, gold, per_sentence=args.per_sentence)
    if args.machine_readable:
        print(report.as_kv())
        print(f"links={count_links(pred)}")
    else:
        print(report.as_text())


def _cmd_pipeline(args):
    if bool(args.config) == bool(args.manifest):
        raise UsageError("give either a config file or --manifest")
    if args.manifest:
        cfg = config_from_manifest(_existing(args.manifest), args.out_dir)
    else:
        cfg = load_config(_existing(args.config))
        if args.out_dir:
            cfg = replace(cfg, out_dir=args.out_dir)
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = apply_overrides(cfg, overrides, os.getcwd()).validate()
    reports = run_pipeline(cfg)
    for name, report in reports.items():
        print(f"{name}\tprecision={report.precision:.1f}\trecall={report.recall:.1f}\t"
              f"aer={report.aer:.1f}")


COMMANDS = {
    "extract-noise": _cmd_extract_noise,
    "apply-noise": _cmd_apply_noise,
    "make-testsets": _cmd_make_testsets,
    "train": _cmd_train,
    "align": _cmd_align,
    "rescore": _cmd_rescore,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"ocralign {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, ModelError, AlignerError, BiasError, EvalError, CalibrationError,
            StageError, ValueError, OSError) as exc:
        print(f"ocralign {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
