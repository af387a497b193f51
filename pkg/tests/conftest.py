import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diffractor.core import ListBank  # noqa: E402
from diffractor.embeddings import EmbeddingModel  # noqa: E402
from diffractor.lists import WordList  # noqa: E402


def random_model(n, dim, seed=0, name="rand"):
    rng = np.random.default_rng(seed)
    words = tuple(f"w{i:05d}" for i in range(n))
    return EmbeddingModel(name, words, rng.standard_normal((n, dim)))


def letter_words(n, seed=0):
    """``n`` distinct lowercase alphabetic tokens."""
    rng = np.random.default_rng(seed)
    letters = np.array(list("abcdefghijklmnopqrstuvwxyz"))
    out = set()
    while len(out) < n:
        out.add("".join(rng.choice(letters, size=6)))
    return sorted(out)


def shuffled_bank(vocab, k, seed=0, tag="custom"):
    rng = np.random.default_rng(seed)
    lists = []
    for i in range(k):
        order = list(vocab)
        rng.shuffle(order)
        lists.append(WordList(tuple(order), {"name": f"list{i}"}))
    return ListBank(lists, tag)


@pytest.fixture
def write_text(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return _write


@pytest.fixture
def tiny_embeddings(write_text):
    rows = [
        "6 2",
        "the 0.0 0.0",
        "cat 1.0 0.0",
        "dog 1.2 0.1",
        "sat 3.0 1.0",
        "mat 3.1 1.2",
        "on 5.0 5.0",
    ]
    return write_text("tiny.txt", "\n".join(rows) + "\n")


# acceptance results, filled by test_acceptance and echoed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def skip_criterion(number, reason):
    line = f"criterion {number:>2} SKIP  {reason}"
    ACCEPTANCE[number] = line
    print(line)
    pytest.skip(reason)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
