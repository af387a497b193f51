"""Plausible-deniability statistics.

For a word ``w``, ``n_w`` is the fraction of perturbations that return
``w`` itself and ``s_w`` is the number of distinct outputs seen. Words are
sampled uniformly from the union of the bank's vocabularies and each one is
perturbed ``trials`` times.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import DiffractorConfig, _lookup, sample_output_ids
from .errors import ContractError, MembershipError
from .mechanisms import exact_pmf

CSV_COLUMNS = ("word", "epsilon", "mechanism", "config", "trials", "n_w", "s_w")


@dataclass(frozen=True)
class DeniabilityStats:
    word: str
    epsilon: float
    trials: int
    n_w: float
    s_w: int

    def __post_init__(self):
        if not 1 <= self.s_w <= self.trials:
            raise ValueError(f"s_w={self.s_w} outside [1, {self.trials}]")


@dataclass(frozen=True)
class DeniabilitySummary:
    stats: list[DeniabilityStats]
    mean_n_w: float
    mean_s_w: float


def sample_words(cfg: DiffractorConfig, sample_size: int, rng) -> list[str]:
    vocab = cfg.bank.vocabulary
    if not vocab:
        raise ContractError("bank vocabulary is empty")
    size = min(sample_size, len(vocab))
    picks = rng.choice(len(vocab), size=size, replace=False)
    return [vocab[i] for i in picks]


def word_stats(word: str, cfg: DiffractorConfig, trials: int, rng) -> DeniabilityStats:
    ids = sample_output_ids(word, cfg, rng, trials)
    if ids is None:
        raise MembershipError(f"{word!r} is not in any list")
    key, _ = _lookup(word, cfg)
    self_id = cfg.bank.global_id(key)
    same = int(np.count_nonzero(ids == self_id))
    return DeniabilityStats(word, cfg.mechanism.epsilon, trials, same / trials, int(np.unique(ids).size))


def estimate_deniability(cfg: DiffractorConfig, sample_size: int = 100, trials: int = 100,
                         rng=None, words=None) -> DeniabilitySummary:
    """Estimate ``n_w`` and ``s_w`` over a random word sample.

    Pass the same ``words`` (or an identically seeded ``rng``) across
    epsilon values to compare settings on matched samples.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    if words is None:
        words = sample_words(cfg, sample_size, rng)
    stats = [word_stats(w, cfg, trials, rng) for w in words]
    return DeniabilitySummary(
        stats=stats,
        mean_n_w=float(np.mean([s.n_w for s in stats])),
        mean_s_w=float(np.mean([s.s_w for s in stats])),
    )


def expected_n_w(word: str, cfg: DiffractorConfig) -> float:
    """Exact probability that the diffractor returns ``word`` unchanged.

    A list holds each word once, so only the word's own index maps back to
    it; the result is the mixture mass at that index over containing lists.
    """
    _, hits = _lookup(word, cfg)
    if not hits:
        raise MembershipError(f"{word!r} is not in any list")
    bank = cfg.bank
    total = sum(exact_pmf(idx, cfg.mechanism, bank.size(li))[idx] for li, idx in hits)
    return float(total / len(hits))


def write_stats_csv(rows, fh, mechanism: str, config: str):
    """Write ``DeniabilityStats`` rows with the fixed column schema."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in rows:
        writer.writerow([s.word, s.epsilon, mechanism, config, s.trials, f"{s.n_w:.6g}", s.s_w])
