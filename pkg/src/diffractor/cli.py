"""Command-line entry point: ``diffractor build-list | perturb | stats | bench``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
import time

import numpy as np

from . import bench
from .config import RunConfig, build_bank, diffractor_config, load_run_config
from .core import perturb_lines
from .embeddings import load_embeddings
from .errors import (ConfigError, ContractError, EmbeddingFormatError, EmptyModelError,
                     ListCorruptionError, ListFormatError, MembershipError)
from .evaluation import estimate_deniability, sample_words, write_stats_csv
from .lists import EXACT, EXACT_VOCAB_WARN, build_list, save_list
from .mvc import MvcMechanism

log = logging.getLogger("diffractor")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CONTRACT = 4
EXIT_DATA = 5

RECORD_COLUMNS = ("line", "position", "original", "output", "chosen_list", "was_oov")


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


@contextlib.contextmanager
def _open_in(path):
    if path is None or path == "-":
        yield sys.stdin
    else:
        with open(path, encoding="utf-8") as fh:
            yield fh


def _run_overrides(args) -> dict:
    return {
        "mechanism": args.mechanism, "epsilon": args.epsilon, "beta": args.beta,
        "lists": args.lists, "master_seed": args.master_seed,
        "oov_policy": args.oov_policy, "case_policy": args.case_policy,
        "mvc_embeddings": getattr(args, "mvc_embeddings", None),
    }


def _load_run(args) -> RunConfig:
    return load_run_config(args.config, _run_overrides(args))


def cmd_build_list(args):
    backend = args.backend
    t0 = time.perf_counter()
    model = load_embeddings(args.embeddings, limit=args.limit, lowercase=args.lowercase)
    if backend == EXACT and len(model) > EXACT_VOCAB_WARN:
        log.warning("exact backend on %d words is O(|V|^2 d); consider --backend approx or --limit",
                    len(model))
    wl = build_list(model, args.seed, backend)
    save_list(wl, args.out)
    elapsed = time.perf_counter() - t0
    print(f"built list of {len(wl)} words from {args.embeddings} in {elapsed:.2f}s -> {args.out}",
          file=sys.stderr)
    return EXIT_OK


def cmd_perturb(args):
    run = _load_run(args)
    bank = build_bank(run)
    cfg = diffractor_config(run, bank)
    in_path = args.input if args.input is not None else None
    out_path = args.output if args.output is not None else run.out
    rec_path = args.records if args.records is not None else run.records
    with _open_in(in_path) as src, _open_out(out_path) as dst, \
            contextlib.ExitStack() as stack:
        writer = None
        if rec_path:
            rec_fh = stack.enter_context(open(rec_path, "w", encoding="utf-8", newline=""))
            writer = csv.writer(rec_fh, lineterminator="\n")
            writer.writerow(RECORD_COLUMNS)
        for line_no, (text, records) in enumerate(
                perturb_lines(src, cfg, run.master_seed, workers=args.workers)):
            dst.write(text + "\n")
            if writer is not None:
                for pos, r in enumerate(records):
                    writer.writerow([line_no, pos, r.original, "" if r.output is None else r.output,
                                     r.chosen_list or "", int(r.was_oov)])
    return EXIT_OK


def _parse_grid(text):
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --eps-grid {text!r}", ["eps_grid"]) from None
    if not grid or any(e <= 0 for e in grid):
        raise ConfigError("--eps-grid needs positive values", ["eps_grid"])
    return grid


def cmd_stats(args):
    run = _load_run(args)
    grid = _parse_grid(args.eps_grid) if args.eps_grid else [run.epsilon]
    bank = build_bank(run)
    base = diffractor_config(run, bank)
    words = sample_words(base, args.sample, np.random.default_rng([run.master_seed, 0]))
    out_path = args.out if args.out is not None else run.out
    with _open_out(out_path) as fh:
        rows = []
        for eps in grid:
            cfg = diffractor_config(run, bank, epsilon=eps)
            # matched seed per epsilon
            summary = estimate_deniability(cfg, trials=args.trials, words=words,
                                           rng=np.random.default_rng([run.master_seed, 1]))
            rows.extend(summary.stats)
            print(f"eps={eps:g} mean_n_w={summary.mean_n_w:.4f} mean_s_w={summary.mean_s_w:.2f}",
                  file=sys.stderr)
        write_stats_csv(rows, fh, base.mechanism.tag, bank.config_tag)
    return EXIT_OK


def cmd_bench(args):
    run = _load_run(args)
    kinds = [k.strip() for k in args.mechanisms.split(",")] if args.mechanisms else [run.mechanism]
    bank, init_s = bench.initialize(lambda: build_bank(run))
    rng = np.random.default_rng([run.master_seed, 2])
    mvc = None
    mvc_init = 0.0
    if args.baseline == "mvc":
        path = run.mvc_embeddings or (run.embeddings[0] if run.embeddings else None)
        if path is None:
            raise ConfigError("the mvc baseline needs mvc_embeddings (or embeddings) in the config",
                              ["mvc_embeddings"])
        model, mvc_init = bench.initialize(
            lambda: load_embeddings(path, limit=run.limit, lowercase=run.lowercase))
        mvc = MvcMechanism(model, run.epsilon)
    vocab = [w for w in bank.vocabulary if mvc is None or w in mvc.model]
    if not vocab:
        raise ContractError("no words shared between the lists and the mvc model")
    words = [vocab[i] for i in rng.integers(len(vocab), size=args.words)]

    targets = [(diffractor_config(run, bank, mechanism=k), init_s) for k in kinds]
    if mvc is not None:
        targets.append((mvc, mvc_init))

    corpus = args.corpus or run.corpus
    if args.mode == "corpus" and not corpus:
        raise ConfigError("--mode corpus needs --corpus or a corpus key", ["corpus"])
    reports = []
    for mech, init in targets:
        if args.mode == "corpus":
            rep = bench.bench_corpus(mech, corpus, repeats=args.repeats, rng_seed=run.master_seed,
                                     init_time=init)
        else:
            rep = bench.bench_throughput(mech, words, repeats=args.repeats,
                                         rng_seed=run.master_seed, init_time=init)
        if not args.no_memory:
            mem = bench.bench_memory(mech, words, rng_seed=run.master_seed)
            rep.peak_extra_memory, rep.per_word_memory = mem.peak_extra_memory, mem.per_word_memory
        reports.append(rep)
        print(f"{rep.mechanism}: {rep.tokens_per_second:.1f} tok/s, {rep.tokens_per_day:.3g} tok/day",
              file=sys.stderr)
    out_path = args.out if args.out is not None else run.out
    with _open_out(out_path) as fh:
        bench.write_reports_csv(reports, fh)
    return EXIT_OK


def _add_run_options(p):
    p.add_argument("--config", help="flat key=value run configuration file")
    p.add_argument("--mechanism", choices=["geometric", "tem"])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--lists", help="comma-separated list files (overrides config)")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--oov-policy", choices=["passthrough", "drop"])
    p.add_argument("--case-policy", choices=["lowercase", "preserve-attempt"])


def make_parser():
    parser = argparse.ArgumentParser(prog="diffractor",
                                     description="Word-level text obfuscation over 1-D word lists.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-list", help="linearize an embedding file into a word list")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int)
    p.add_argument("--backend", choices=["exact", "approx"], default="exact")
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_list)

    p = sub.add_parser("perturb", help="perturb text line by line")
    _add_run_options(p)
    p.add_argument("--in", dest="input", help="input file (default stdin)")
    p.add_argument("--out", dest="output", help="output file (default stdout)")
    p.add_argument("--records", help="per-token record CSV")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("stats", help="plausible-deniability statistics over an epsilon grid")
    _add_run_options(p)
    p.add_argument("--sample", type=int, default=100)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--eps-grid", help="comma-separated epsilons")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="throughput and memory benchmarks")
    _add_run_options(p)
    p.add_argument("--mode", choices=["1000", "corpus"], default="1000")
    p.add_argument("--baseline", choices=["mvc", "none"], default="none")
    p.add_argument("--mvc-embeddings", help="embedding file for the mvc baseline")
    p.add_argument("--mechanisms", help="comma-separated diffractor mechanisms to time")
    p.add_argument("--corpus")
    p.add_argument("--words", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--no-memory", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EmbeddingFormatError, EmptyModelError, ListFormatError, ListCorruptionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"I/O error: {name + ': ' if name else ''}{exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (ContractError, MembershipError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
