"""Word-by-word text obfuscation through one or more word lists.

Each in-vocabulary word is pushed through the configured index mechanism in
every list that contains it, giving one candidate per list; one candidate is
then released uniformly at random. Only that single output leaves
:func:`perturb_word` (the other candidates are kept only in debug mode).
"""

from __future__ import annotations

import re
import unicodedata
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import mechanisms as mech
from .errors import ContractError, MembershipError
from .lists import WordList

PASSTHROUGH = "passthrough"
DROP = "drop"
LOWERCASE = "lowercase"
PRESERVE = "preserve-attempt"
CONFIG_TAGS = ("L0", "L1", "L2", "custom")


class ListBank:
    """An ordered collection of word lists.

    Lists may cover different vocabularies. Lookups return, for every list
    containing a word, the pair ``(list position, index in that list)``.
    """

    def __init__(self, lists: Sequence[WordList], config_tag: str = "custom"):
        lists = tuple(lists)
        if not lists:
            raise ContractError("a list bank needs at least one list")
        if config_tag not in CONFIG_TAGS:
            raise ContractError(f"config_tag must be one of {CONFIG_TAGS}, got {config_tag!r}")
        self.lists = lists
        self.config_tag = config_tag
        self.names = _unique_names(wl.name for wl in lists)

        self._where: dict[str, list[tuple[int, int]]] = {}
        for li, wl in enumerate(lists):
            for idx, w in enumerate(wl.words):
                self._where.setdefault(w, []).append((li, idx))
        self.vocabulary: tuple[str, ...] = tuple(self._where)
        self._gid = {w: i for i, w in enumerate(self.vocabulary)}
        # per list: position -> id in the union vocabulary
        self._list_gids = [np.fromiter((self._gid[w] for w in wl.words), dtype=np.int64, count=len(wl))
                           for wl in lists]
        self._sizes = [len(wl) for wl in lists]

    def __len__(self):
        return len(self.lists)

    def __contains__(self, word):
        return word in self._where

    def locate(self, word: str) -> list[tuple[int, int]]:
        return self._where.get(word, [])

    def global_id(self, word: str) -> int:
        return self._gid[word]

    def list_gids(self, li: int) -> np.ndarray:
        return self._list_gids[li]

    def size(self, li: int) -> int:
        return self._sizes[li]


def _unique_names(names: Iterable[str]):
    out, seen = [], {}
    for n in names:
        if n in seen:
            seen[n] += 1
            out.append(f"{n}[{seen[n]}]")
        else:
            seen[n] = 0
            out.append(n)
    return tuple(out)


@dataclass(frozen=True)
class DiffractorConfig:
    mechanism: mech.MechanismConfig
    bank: ListBank
    oov_policy: str = PASSTHROUGH
    case_policy: str = LOWERCASE
    tokenizer: str = "whitespace-punct"

    def __post_init__(self):
        if self.oov_policy not in (PASSTHROUGH, DROP):
            raise ContractError(f"oov_policy must be passthrough or drop, got {self.oov_policy!r}")
        if self.case_policy not in (LOWERCASE, PRESERVE):
            raise ContractError(f"case_policy must be lowercase or preserve-attempt, got {self.case_policy!r}")
        if self.tokenizer != "whitespace-punct":
            raise ContractError(f"unsupported tokenizer {self.tokenizer!r}")


@dataclass(frozen=True, slots=True)
class PerturbationRecord:
    original: str
    output: str | None  # None when dropped by the oov policy
    chosen_list: str | None
    was_oov: bool
    candidates: tuple[str, ...] | None = field(default=None, compare=False)


# -- tokenization -------------------------------------------------------------

_SPLIT = re.compile(r"\S+")


def _is_punct(ch):
    return unicodedata.category(ch)[0] in "PS"


def tokenize(text: str) -> list[str]:
    """Split on whitespace, then peel leading and trailing punctuation runs
    off each chunk as separate tokens."""
    tokens = []
    for chunk in _SPLIT.findall(text):
        start, end = 0, len(chunk)
        while start < end and _is_punct(chunk[start]):
            start += 1
        while end > start and _is_punct(chunk[end - 1]):
            end -= 1
        # an all-punctuation chunk ends up entirely in the leading run
        for part in (chunk[:start], chunk[start:end], chunk[end:]):
            if part:
                tokens.append(part)
    return tokens


def is_word(token: str) -> bool:
    """Tokens without any letter (punctuation, numbers) are never perturbed."""
    return any(ch.isalpha() for ch in token)


# -- perturbation -------------------------------------------------------------

def _lookup(word, cfg):
    bank = cfg.bank
    if cfg.case_policy == PRESERVE:
        hits = bank.locate(word)
        if hits:
            return word, hits
    key = word.casefold()
    return key, bank.locate(key)


def _candidate_indices(hits, cfg, stream):
    m = cfg.mechanism
    sizes = cfg.bank._sizes
    if m.kind == mech.GEOMETRIC:
        eps = m.epsilon
        out = []
        for li, idx in hits:
            j = idx + stream.two_sided_geometric(eps)
            top = sizes[li] - 1
            out.append(0 if j < 0 else top if j > top else j)
        return out
    return [mech.perturb_index_tem(idx, m.epsilon, m.beta, sizes[li], stream.rng) for li, idx in hits]


def perturb_word(word: str, cfg: DiffractorConfig, rng, debug: bool = False) -> PerturbationRecord:
    """Privatize one word.

    The word is looked up under the case policy. If no list contains it the
    OOV policy applies. Otherwise every containing list produces a candidate
    and one is picked uniformly at random. ``rng`` is a numpy Generator, a
    seed, or a :class:`~diffractor.mechanisms.NoiseStream` (preferred in
    loops).
    """
    key, hits = _lookup(word, cfg)
    if not hits:
        out = word if cfg.oov_policy == PASSTHROUGH else None
        return PerturbationRecord(word, out, None, True)
    stream = mech.as_stream(rng)
    bank = cfg.bank
    picked = _candidate_indices(hits, cfg, stream)
    k = stream.index(len(hits)) if len(hits) > 1 else 0
    li = hits[k][0]
    output = bank.lists[li].words[picked[k]]
    candidates = None
    if debug:
        candidates = tuple(bank.lists[l].words[j] for (l, _), j in zip(hits, picked))
    return PerturbationRecord(word, output, bank.names[li], False, candidates)


def perturb_tokens(tokens: Sequence[str], cfg: DiffractorConfig, rng,
                   debug: bool = False) -> list[PerturbationRecord]:
    stream = mech.as_stream(rng, block=256)
    records = []
    for tok in tokens:
        if is_word(tok):
            records.append(perturb_word(tok, cfg, stream, debug))
        else:
            records.append(PerturbationRecord(tok, tok, None, False))
    return records


def perturb_text(text: str, cfg: DiffractorConfig, rng, debug: bool = False):
    """Perturb every word of ``text`` independently.

    Returns ``(output, records)``. Output tokens are joined by single spaces,
    so the original spacing is not preserved. Each input token yields exactly
    one record; with the default passthrough policy the output has exactly
    as many tokens as the input (the sentence length is not hidden).
    """
    records = perturb_tokens(tokenize(text), cfg, rng, debug)
    output = " ".join(r.output for r in records if r.output is not None)
    return output, records


def line_rng(master_seed: int, line_no: int):
    """Independent RNG stream for one input line."""
    return np.random.default_rng([master_seed, line_no])


_worker_cfg = None


def _init_worker(cfg):
    global _worker_cfg
    _worker_cfg = cfg


def _perturb_numbered(args):
    line_no, line, seed, debug = args
    return perturb_text(line, _worker_cfg, line_rng(seed, line_no), debug)


def perturb_lines(lines: Iterable[str], cfg: DiffractorConfig, master_seed: int,
                  workers: int = 1, debug: bool = False, chunksize: int = 64):
    """Yield ``(output, records)`` per line, in input order.

    Line ``i`` always draws from ``line_rng(master_seed, i)``, so output does
    not depend on ``workers``.
    """
    numbered = ((i, line.rstrip("\r\n"), master_seed, debug) for i, line in enumerate(lines))
    if workers <= 1:
        for i, line, seed, dbg in numbered:
            yield perturb_text(line, cfg, line_rng(seed, i), dbg)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(cfg,)) as pool:
        # map() yields in submission order, which is the reorder buffer
        yield from pool.map(_perturb_numbered, numbered, chunksize=chunksize)


# -- vectorized sampling (used by the evaluation harness) ----------------------

def sample_output_ids(word: str, cfg: DiffractorConfig, rng, n: int):
    """``n`` diffractor outputs for ``word`` as ids into ``bank.vocabulary``.

    Same distribution as ``n`` calls of :func:`perturb_word`. Returns None
    for an out-of-vocabulary word.
    """
    _, hits = _lookup(word, cfg)
    if not hits:
        return None
    bank = cfg.bank
    cand = np.empty((len(hits), n), dtype=np.int64)
    for row, (li, idx) in enumerate(hits):
        js = mech.perturb_index_many(idx, cfg.mechanism, bank.size(li), rng, n)
        cand[row] = bank.list_gids(li)[js]
    if len(hits) == 1:
        return cand[0]
    pick = rng.integers(len(hits), size=n)
    return cand[pick, np.arange(n)]


def output_distribution(word: str, cfg: DiffractorConfig) -> dict[str, float]:
    """Exact output distribution of :func:`perturb_word` for an in-vocabulary word."""
    key, hits = _lookup(word, cfg)
    if not hits:
        raise MembershipError(f"{word!r} is not in any list")
    bank = cfg.bank
    dist: dict[str, float] = {}
    for li, idx in hits:
        pmf = mech.exact_pmf(idx, cfg.mechanism, bank.size(li))
        for w, p in zip(bank.lists[li].words, pmf):
            if p:
                dist[w] = dist.get(w, 0.0) + p / len(hits)
    return dist


# -- diagnostics --------------------------------------------------------------

def d_max(word: str, word2: str, bank: ListBank) -> int:
    """Largest index distance between the two words over lists holding both."""
    best = None
    for wl in bank.lists:
        i, j = wl.get_index(word), wl.get_index(word2)
        if i is None or j is None:
            continue
        d = abs(i - j)
        if best is None or d > best:
            best = d
    if best is None:
        raise MembershipError(f"no list contains both {word!r} and {word2!r}")
    return best


def sentence_distance(s: Sequence[str], s2: Sequence[str], bank: ListBank) -> int:
    """Sum of position-wise ``d_max`` for two equal-length token sequences."""
    if len(s) != len(s2):
        raise ContractError(f"sentences must have equal length ({len(s)} != {len(s2)})")
    return sum(d_max(a, b, bank) for a, b in zip(s, s2))
