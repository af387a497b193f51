"""Throughput and memory measurements.

Mechanisms are set up before anything is timed; their setup cost is
reported separately as ``init_s``. Throughput is the median over repeats of
a timed pass over a fixed word sample (or a whole corpus), extrapolated to
24 hours. Memory is tracked with ``tracemalloc``: every perturbation call
is charged its peak allocation, and the charges are summed over the sample.
"""

from __future__ import annotations

import csv
import gc
import statistics
import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from .core import DiffractorConfig, is_word, perturb_word, tokenize
from .mechanisms import NoiseStream
from .mvc import MvcMechanism

SECONDS_PER_DAY = 86400
CSV_COLUMNS = ("mechanism", "config", "epsilon", "tokens", "wall_s", "tok_per_s", "tok_per_day",
               "init_s", "total_mem_bytes", "per_word_mem_bytes")


class DiffractorMechanism:
    """Adapter exposing a diffractor config as ``perturb(word, rng) -> str``."""

    def __init__(self, cfg: DiffractorConfig):
        self.cfg = cfg
        self.tag = cfg.mechanism.tag
        self.config = cfg.bank.config_tag
        self.epsilon = cfg.mechanism.epsilon

    def perturb(self, word, rng):
        return perturb_word(word, self.cfg, rng).output

    def make_rng(self, seed):
        return NoiseStream(seed)


class MvcAdapter:
    """MVC with passthrough for words the model lacks (corpus runs)."""

    def __init__(self, mech: MvcMechanism):
        self.mech = mech
        self.tag = mech.tag
        self.config = mech.model.name
        self.epsilon = mech.epsilon

    def perturb(self, word, rng):
        if self.mech.model.index_of(word) is None:
            return word
        return self.mech.perturb(self.mech.model.normalize(word), rng)


def _make_rng(mech, seed):
    make = getattr(mech, "make_rng", None)
    return make(seed) if make else np.random.default_rng(seed)


def as_benchable(mech):
    if isinstance(mech, DiffractorConfig):
        return DiffractorMechanism(mech)
    if isinstance(mech, MvcMechanism):
        return MvcAdapter(mech)
    return mech


@dataclass
class BenchReport:
    mechanism: str
    config: str
    epsilon: float
    tokens_measured: int
    wall_time: float
    tokens_per_second: float
    tokens_per_day: float
    init_time: float = 0.0
    peak_extra_memory: int | None = None
    per_word_memory: float | None = None
    repeats: int = 1

    def csv_row(self):
        return [self.mechanism, self.config, self.epsilon, self.tokens_measured,
                f"{self.wall_time:.6g}", repr(self.tokens_per_second), repr(self.tokens_per_day),
                f"{self.init_time:.6g}",
                "" if self.peak_extra_memory is None else self.peak_extra_memory,
                "" if self.per_word_memory is None else f"{self.per_word_memory:.6g}"]


def _rates(tokens, wall):
    tps = tokens / wall if wall > 0 else float("inf")
    return tps, tps * SECONDS_PER_DAY


def initialize(factory):
    """Run ``factory()`` and return ``(mechanism, seconds)``."""
    t0 = time.perf_counter()
    mech = factory()
    return mech, time.perf_counter() - t0


def bench_throughput(mechanism, words, repeats: int = 5, rng_seed: int = 0,
                     init_time: float = 0.0) -> BenchReport:
    """Median time to perturb ``words`` once, over ``repeats`` passes.

    One warm-up call precedes the timed section.
    """
    mech = as_benchable(mechanism)
    words = list(words)
    if not words:
        raise ValueError("word sample is empty")
    rng = _make_rng(mech, rng_seed)
    mech.perturb(words[0], rng)
    walls = []
    for _ in range(max(1, repeats)):
        perturb = mech.perturb
        t0 = time.perf_counter()
        for w in words:
            perturb(w, rng)
        walls.append(time.perf_counter() - t0)
    wall = statistics.median(walls)
    tps, tpd = _rates(len(words), wall)
    return BenchReport(mech.tag, mech.config, mech.epsilon, len(words), wall, tps, tpd,
                       init_time=init_time, repeats=len(walls))


def bench_corpus(mechanism, corpus_path, repeats: int = 1, rng_seed: int = 0,
                 init_time: float = 0.0) -> BenchReport:
    """Perturb a whole text corpus, token by token, and extrapolate to a day.

    Tokens are counted with the diffractor tokenizer; punctuation and
    numbers count as tokens but pass through unchanged.
    """
    mech = as_benchable(mechanism)
    with open(corpus_path, encoding="utf-8") as fh:
        lines = fh.readlines()
    rng = _make_rng(mech, rng_seed)
    walls, tokens = [], 0
    for _ in range(max(1, repeats)):
        perturb = mech.perturb
        tokens = 0
        t0 = time.perf_counter()
        for line in lines:
            for tok in tokenize(line):
                tokens += 1
                if is_word(tok):
                    perturb(tok, rng)
        walls.append(time.perf_counter() - t0)
    wall = statistics.median(walls)
    tps, tpd = _rates(tokens, wall)
    return BenchReport(mech.tag, mech.config, mech.epsilon, tokens, wall, tps, tpd,
                       init_time=init_time, repeats=len(walls))


def bench_memory(mechanism, words, rng_seed: int = 0, init_time: float = 0.0) -> BenchReport:
    """Allocation cost of perturbing ``words``, summed call by call.

    Each call contributes its peak traced allocation above the level just
    before it, so transient buffers count once per word and the total grows
    linearly with the number of words. Outputs are kept, so retained memory
    is included too. Setup (lists, models) and one warm-up call happen
    before tracing and are excluded.
    """
    mech = as_benchable(mechanism)
    words = list(words)
    if not words:
        raise ValueError("word sample is empty")
    rng = _make_rng(mech, rng_seed)
    mech.perturb(words[0], rng)
    outputs = []
    total = 0
    gc.collect()
    started_here = not tracemalloc.is_tracing()
    if started_here:
        tracemalloc.start()
    try:
        perturb, get, reset = mech.perturb, tracemalloc.get_traced_memory, tracemalloc.reset_peak
        t0 = time.perf_counter()
        for w in words:
            reset()
            before = get()[0]
            outputs.append(perturb(w, rng))
            total += max(0, get()[1] - before)
        wall = time.perf_counter() - t0
    finally:
        if started_here:
            tracemalloc.stop()
    tps, tpd = _rates(len(words), wall)
    return BenchReport(mech.tag, mech.config, mech.epsilon, len(words), wall, tps, tpd,
                       init_time=init_time, peak_extra_memory=total,
                       per_word_memory=total / len(words))


def write_reports_csv(reports, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(r.csv_row())

