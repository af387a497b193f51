import csv

import numpy as np
import pytest

from conftest import letter_words
from diffractor.cli import EXIT_CONFIG, EXIT_CONTRACT, EXIT_DATA, EXIT_IO, EXIT_OK, main
from diffractor.embeddings import EmbeddingModel, save_embeddings
from diffractor.lists import load_list


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    words = tuple(letter_words(120, seed=3))
    rng = np.random.default_rng(0)
    for k in range(2):
        model = EmbeddingModel(f"m{k}", words, rng.standard_normal((len(words), 8)))
        save_embeddings(model, root / f"m{k}.txt", header=k == 0)
    for k in range(2):
        assert main(["build-list", "--embeddings", str(root / f"m{k}.txt"), "--seed", str(k),
                     "--out", str(root / f"l{k}.list")]) == EXIT_OK
    (root / "run.cfg").write_text("mechanism = geometric\nepsilon = 1.0\nlists = l0.list, l1.list\n"
                                  "config_tag = L1\nmaster_seed = 7\n", encoding="utf-8")
    text = [" ".join(rng.choice(words, size=10)) + " ." for _ in range(30)]
    (root / "in.txt").write_text("\n".join(text) + "\n", encoding="utf-8")
    return root, words


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_build_list_deterministic(workspace, tmp_path):
    root, words = workspace
    out = tmp_path / "again.list"
    assert main(["build-list", "--embeddings", str(root / "m0.txt"), "--seed", "0", "--out", str(out)]) == 0
    assert out.read_bytes() == (root / "l0.list").read_bytes()
    assert sorted(load_list(out).words) == sorted(words)


def test_build_list_limit_and_approx(workspace, tmp_path):
    root, words = workspace
    out = tmp_path / "small.list"
    assert main(["build-list", "--embeddings", str(root / "m1.txt"), "--limit", "40",
                 "--backend", "approx", "--out", str(out)]) == 0
    wl = load_list(out)
    assert sorted(wl.words) == sorted(words[:40])
    assert wl.meta["backend"] == "approx"


def test_build_list_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    code = main(["build-list", "--embeddings", str(missing), "--out", str(tmp_path / "x.list")])
    assert code == EXIT_IO
    assert str(missing) in capsys.readouterr().err


def test_build_list_bad_data(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("a 1 2\nb 1\nc 3 4\n", encoding="utf-8")
    assert main(["build-list", "--embeddings", str(bad), "--out", str(tmp_path / "x.list")]) == EXIT_DATA
    assert "line 2" in capsys.readouterr().err


def test_perturb_reproducible(workspace, tmp_path):
    root, _ = workspace
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}.txt"
        rec = tmp_path / f"r{k}.csv"
        assert main(["perturb", "--config", str(root / "run.cfg"), "--in", str(root / "in.txt"),
                     "--out", str(out), "--records", str(rec)]) == EXIT_OK
        outs.append((out.read_bytes(), rec.read_bytes()))
    assert outs[0] == outs[1]
    lines = outs[0][0].decode().splitlines()
    assert len(lines) == 30
    assert all(len(line.split()) == 11 for line in lines)
    rows = read_csv(tmp_path / "r0.csv")
    assert list(rows[0]) == ["line", "position", "original", "output", "chosen_list", "was_oov"]
    assert len(rows) == 30 * 11
    assert all(r["output"] == "." for r in rows if r["original"] == ".")


def test_perturb_workers_match_serial(workspace, tmp_path):
    root, _ = workspace
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    base = ["perturb", "--config", str(root / "run.cfg"), "--in", str(root / "in.txt")]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_perturb_empty_input(workspace, tmp_path):
    root, _ = workspace
    src, out = tmp_path / "empty.txt", tmp_path / "out.txt"
    src.write_text("", encoding="utf-8")
    assert main(["perturb", "--config", str(root / "run.cfg"), "--in", str(src), "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == ""


def test_perturb_large_epsilon_mostly_identity(workspace, tmp_path):
    root, _ = workspace
    out = tmp_path / "o.txt"
    assert main(["perturb", "--config", str(root / "run.cfg"), "--epsilon", "50",
                 "--in", str(root / "in.txt"), "--out", str(out)]) == 0
    got = out.read_text(encoding="utf-8").split()
    ref = (root / "in.txt").read_text(encoding="utf-8").split()
    assert np.mean([a == b for a, b in zip(got, ref)]) >= 0.95


def test_stats_grid(workspace, tmp_path):
    root, _ = workspace
    out = tmp_path / "s.csv"
    assert main(["stats", "--config", str(root / "run.cfg"), "--sample", "20", "--trials", "300",
                 "--eps-grid", "0.1,1,10", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["word", "epsilon", "mechanism", "config", "trials", "n_w", "s_w"]
    assert len(rows) == 60
    assert {r["config"] for r in rows} == {"L1"}
    means = [np.mean([float(r["n_w"]) for r in rows if float(r["epsilon"]) == e]) for e in (0.1, 1, 10)]
    assert means[0] < means[1] < means[2]


def test_stats_single_trial(workspace, tmp_path):
    root, _ = workspace
    out = tmp_path / "s1.csv"
    assert main(["stats", "--config", str(root / "run.cfg"), "--sample", "10", "--trials", "1",
                 "--out", str(out)]) == 0
    assert {r["s_w"] for r in read_csv(out)} == {"1"}


def test_bench_rows(workspace, tmp_path):
    root, _ = workspace
    out = tmp_path / "b.csv"
    assert main(["bench", "--config", str(root / "run.cfg"), "--mechanisms", "geometric,tem",
                 "--baseline", "mvc", "--mvc-embeddings", str(root / "m0.txt"),
                 "--words", "50", "--repeats", "2", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["mechanism"] for r in rows] == ["1-D_G", "1-D_T", "MVC"]
    for r in rows:
        assert float(r["tok_per_day"]) == pytest.approx(float(r["tok_per_s"]) * 86400, rel=1e-9)
        assert int(r["tokens"]) == 50


def test_bench_mvc_without_embeddings(workspace, tmp_path):
    root, _ = workspace
    assert main(["bench", "--config", str(root / "run.cfg"), "--baseline", "mvc", "--words", "5",
                 "--out", str(tmp_path / "b.csv")]) == EXIT_CONFIG


def test_bench_corpus_mode(workspace, tmp_path):
    root, _ = workspace
    out = tmp_path / "bc.csv"
    assert main(["bench", "--config", str(root / "run.cfg"), "--mode", "corpus",
                 "--corpus", str(root / "in.txt"), "--repeats", "1", "--no-memory", "--out", str(out)]) == 0
    assert int(read_csv(out)[0]["tokens"]) == 330


def test_bad_config_lists_fields(workspace, tmp_path, capsys):
    root, _ = workspace
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(f"mechanism = laplace\nepsilon = -1\nlists = {root / 'l0.list'}\n", encoding="utf-8")
    assert main(["perturb", "--config", str(cfg), "--in", str(root / "in.txt")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "mechanism" in err and "epsilon" in err


def test_unknown_config_key(workspace, tmp_path, capsys):
    root, _ = workspace
    cfg = tmp_path / "typo.cfg"
    cfg.write_text(f"epsilom = 1\nlists = {root / 'l0.list'}\n", encoding="utf-8")
    assert main(["stats", "--config", str(cfg)]) == EXIT_CONFIG
    assert "epsilom" in capsys.readouterr().err


def test_corrupt_list_is_data_error(workspace, tmp_path):
    root, _ = workspace
    broken = tmp_path / "broken.list"
    broken.write_bytes((root / "l0.list").read_bytes()[:-30])
    assert main(["perturb", "--lists", str(broken), "--in", str(root / "in.txt"),
                 "--out", str(tmp_path / "o.txt")]) == EXIT_DATA


def test_sentence_with_oov_drop(workspace, tmp_path):
    root, _ = workspace
    src, out = tmp_path / "in.txt", tmp_path / "o.txt"
    src.write_text("zzzz " + " ".join(workspace[1][:3]) + "\n", encoding="utf-8")
    assert main(["perturb", "--config", str(root / "run.cfg"), "--oov-policy", "drop",
                 "--in", str(src), "--out", str(out)]) == 0
    assert len(out.read_text(encoding="utf-8").split()) == 3


def test_contract_exit_code_constant():
    assert EXIT_CONTRACT == 4
