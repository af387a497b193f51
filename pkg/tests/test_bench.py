import csv
import io

import numpy as np
import pytest

from conftest import random_model
from diffractor import bench
from diffractor.core import DiffractorConfig, ListBank
from diffractor.lists import WordList
from diffractor.mechanisms import MechanismConfig
from diffractor.mvc import MvcMechanism


def bank_of(n, k=1):
    words = tuple(f"w{i}" for i in range(n))
    return ListBank([WordList(words, {"name": f"l{i}"}) for i in range(k)])


def geo(n, kind="geometric"):
    return DiffractorConfig(MechanismConfig(kind, 1.0), bank_of(n))


def sample(n, size=1000, seed=0):
    rng = np.random.default_rng(seed)
    return [f"w{i}" for i in rng.integers(n, size=size)]


def model_sample(model, size, seed=0):
    rng = np.random.default_rng(seed)
    return [model.words[i] for i in rng.integers(len(model.words), size=size)]


def test_tokens_per_day_identity():
    rep = bench.bench_throughput(geo(2000), sample(2000), repeats=3)
    assert rep.tokens_per_day == rep.tokens_per_second * 86400
    assert rep.tokens_per_second == rep.tokens_measured / rep.wall_time
    assert rep.repeats == 3


def test_init_time_is_separate():
    cfg, init = bench.initialize(lambda: geo(5000))
    assert init > 0
    rep = bench.bench_throughput(cfg, sample(5000), repeats=3, init_time=init)
    assert rep.init_time == init
    # the timed section covers only perturbation calls
    assert rep.tokens_per_second == pytest.approx(rep.tokens_measured / rep.wall_time)


def test_geometric_rate_independent_of_vocab():
    small = bench.bench_throughput(geo(10_000), sample(10_000), repeats=7)
    large = bench.bench_throughput(geo(50_000), sample(50_000), repeats=7)
    ratio = small.tokens_per_second / large.tokens_per_second
    assert 0.5 <= ratio <= 2.0


def test_mvc_rate_degrades_with_vocab():
    rates = {}
    for n in (4000, 32000):
        model = random_model(n, 100, seed=n)
        mech = MvcMechanism(model, 1.0)
        rates[n] = bench.bench_throughput(mech, model_sample(model, 100), repeats=5).tokens_per_second
    assert rates[4000] >= 4 * rates[32000]


def test_mvc_cost_linear_in_vocab():
    sizes = [1000, 2000, 4000, 8000]
    times = []
    for n in sizes:
        model = random_model(n, 300, seed=n)
        mech = MvcMechanism(model, 1.0)
        times.append(bench.bench_throughput(mech, model_sample(model, 50), repeats=5).wall_time / 50)
    slope, intercept = np.polyfit(sizes, times, 1)
    assert slope > 0
    # cost at 8k is well above cost at 1k
    assert times[-1] > 3 * times[0]


def test_memory_report_fields():
    rep = bench.bench_memory(geo(3000), sample(3000))
    assert rep.peak_extra_memory >= 0
    assert rep.per_word_memory == rep.peak_extra_memory / rep.tokens_measured
    assert rep.per_word_memory <= 1024


def test_mvc_memory_scales_with_words():
    model = random_model(5000, 50, seed=1)
    mech = MvcMechanism(model, 1.0)
    small = bench.bench_memory(mech, model_sample(model, 100))
    large = bench.bench_memory(mech, model_sample(model, 400))
    assert large.peak_extra_memory == pytest.approx(4 * small.peak_extra_memory, rel=0.1)
    assert small.per_word_memory >= 5000 * 8


def test_corpus_benchmark(tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("w1 w2, w3 .\nw4 unknown 12\n", encoding="utf-8")
    rep = bench.bench_corpus(geo(10), corpus)
    assert rep.tokens_measured == 8
    assert rep.tokens_per_day == rep.tokens_per_second * 86400
    mvc = MvcMechanism(random_model(10, 3, seed=0), 1.0)
    rep = bench.bench_corpus(mvc, corpus)
    assert rep.mechanism == "MVC" and rep.tokens_measured == 8


def test_corpus_rate_ordering(tmp_path):
    n = 20_000
    corpus = tmp_path / "c.txt"
    model = random_model(n, 100)
    corpus.write_text("\n".join(" ".join(model_sample(model, 12, seed=k)) for k in range(300)),
                      encoding="utf-8")
    bank = ListBank([WordList(model.words)])
    g = bench.bench_corpus(DiffractorConfig(MechanismConfig("geometric", 1.0), bank), corpus, repeats=5)
    t = bench.bench_corpus(DiffractorConfig(MechanismConfig("tem", 1.0), bank), corpus, repeats=5)
    m = bench.bench_corpus(MvcMechanism(model, 1.0), corpus)
    assert g.tokens_per_second > t.tokens_per_second > m.tokens_per_second


def test_csv_columns():
    rep = bench.bench_throughput(geo(100), sample(100, 50), repeats=1)
    buf = io.StringIO()
    bench.write_reports_csv([rep], buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["mechanism", "config", "epsilon", "tokens", "wall_s", "tok_per_s", "tok_per_day",
                       "init_s", "total_mem_bytes", "per_word_mem_bytes"]
    assert rows[1][0] == "1-D_G" and rows[1][3] == "50"
