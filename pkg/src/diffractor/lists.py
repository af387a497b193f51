"""One-dimensional word lists built by greedy nearest-neighbour chaining.

A list is a permutation of an embedding vocabulary. Starting from a random
seed word, the Euclidean-nearest unused word is appended until the
vocabulary is exhausted. A word's position in the list is its 1-D
coordinate; the distance between two words is the absolute difference of
their positions.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingModel
from .errors import ContractError, ListCorruptionError, ListFormatError, MembershipError

log = logging.getLogger(__name__)

EXACT = "exact"
APPROX = "approx"
_BACKEND_ALIASES = {"exact": EXACT, "approx": APPROX, "approximate": APPROX}

# above this the exact O(|V|^2 d) scan gets slow; the CLI warns
EXACT_VOCAB_WARN = 50_000


@dataclass(frozen=True, eq=False)
class WordList:
    """An ordered permutation of a vocabulary.

    ``words[i]`` is the word at index ``i`` and ``index_of`` is its exact
    inverse. ``meta`` carries provenance (source model, seed word, RNG seed,
    metric, backend, checksum).
    """

    words: tuple[str, ...]
    meta: dict = field(default_factory=dict)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        words = tuple(self.words)
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise ListFormatError(f"duplicate token {w!r} at positions {index[w]} and {i}")
            index[w] = i
        if not words:
            raise ListFormatError("a word list needs at least one word")
        meta = dict(self.meta)
        meta.setdefault("checksum", words_checksum(words))
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "meta", meta)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._index

    def __eq__(self, other):
        if not isinstance(other, WordList):
            return NotImplemented
        return self.words == other.words and self.meta == other.meta

    __hash__ = None

    @property
    def name(self) -> str:
        return self.meta.get("name") or f"{self.meta.get('model', 'list')}#{self.meta.get('rng_seed', '?')}"

    def index_of(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise MembershipError(f"{word!r} is not in list {self.name}") from None

    def get_index(self, word: str) -> int | None:
        return self._index.get(word)

    def word_at(self, index: int) -> str:
        return self.words[index]


def words_checksum(words) -> str:
    h = hashlib.sha256()
    for w in words:
        h.update(w.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def distance(wl: WordList, w: str, w2: str) -> int:
    """Index distance ``|index(w) - index(w2)|``."""
    return abs(wl.index_of(w) - wl.index_of(w2))


def _normalize_backend(backend: str) -> str:
    try:
        return _BACKEND_ALIASES[backend]
    except KeyError:
        raise ContractError(f"unknown backend {backend!r}; expected exact or approx") from None


class _Remaining:
    """Unused vocabulary rows with O(1) swap-removal.

    Row order is scrambled by removals, so ties are resolved explicitly on
    the original vocabulary index.
    """

    def __init__(self, vectors, exclude):
        n = vectors.shape[0]
        self.ids = np.delete(np.arange(n), exclude)
        self.vecs = vectors[self.ids].copy()
        self.pos = np.full(n, -1, dtype=np.int64)
        self.pos[self.ids] = np.arange(self.ids.size)
        self.size = self.ids.size
        self.sqnorms = np.einsum("ij,ij->i", self.vecs, self.vecs)

    def nearest(self, point):
        diff = self.vecs[:self.size] - point
        d2 = np.einsum("ij,ij->i", diff, diff)
        best = d2.min()
        hits = np.flatnonzero(d2 == best)
        if hits.size == 1:
            return int(self.ids[hits[0]])
        return int(self.ids[hits].min())

    def nearest_blas(self, point):
        # |x|^2 - 2 x.p ranks like |x - p|^2; cheaper but rounds differently
        d2 = self.sqnorms[:self.size] - 2.0 * (self.vecs[:self.size] @ point)
        return int(self.ids[int(np.argmin(d2))])

    def remove(self, vid):
        k = self.pos[vid]
        last = self.size - 1
        if k != last:
            moved = self.ids[last]
            self.ids[k] = moved
            self.vecs[k] = self.vecs[last]
            self.sqnorms[k] = self.sqnorms[last]
            self.pos[moved] = k
        self.pos[vid] = -1
        self.size = last


def _chain_exact(vectors, start):
    remaining = _Remaining(vectors, start)
    order = [start]
    cur = start
    while remaining.size:
        cur = remaining.nearest(vectors[cur])
        remaining.remove(cur)
        order.append(cur)
    return order


def _chain_approx(vectors, start, n_neighbors):
    # A cached k-NN row whose first unused entry is found is the true nearest
    # remaining word (everything closer is in the cache and already used), so
    # the only departures from the exact chain come from tie order and the
    # rounding of the k-NN distance computation. When a row is exhausted we
    # fall back to one exact scan over the remaining words.
    from sklearn.neighbors import NearestNeighbors

    n = vectors.shape[0]
    k = min(n_neighbors + 1, n)
    nn = NearestNeighbors(n_neighbors=k).fit(vectors)
    _, nbrs = nn.kneighbors(vectors)
    ptr = np.zeros(n, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    remaining = _Remaining(vectors, start)
    used[start] = True
    order = [start]
    cur = start
    fallbacks = 0
    while remaining.size:
        row = nbrs[cur]
        p = ptr[cur]
        while p < k and used[row[p]]:
            p += 1
        ptr[cur] = p
        if p < k:
            nxt = int(row[p])
        else:
            nxt = remaining.nearest_blas(vectors[cur])
            fallbacks += 1
        remaining.remove(nxt)
        used[nxt] = True
        order.append(nxt)
        cur = nxt
    log.debug("approx chain: %d exact fallbacks over %d steps", fallbacks, n - 1)
    return order


def build_list(model: EmbeddingModel, rng_seed: int, backend: str = EXACT,
               n_neighbors: int = 32, seed_word: str | None = None) -> WordList:
    """Linearize ``model`` into a word list.

    The seed word is drawn uniformly with ``numpy.random.default_rng(rng_seed)``.
    ``exact`` scans every remaining word per step (ties go to the smallest
    vocabulary index). ``approx`` walks a precomputed ``n_neighbors``-NN graph
    and only scans when a word's cached neighbours are all used; it agrees
    with ``exact`` up to ties and near-ties. ``seed_word`` pins the starting
    word instead of drawing it.
    """
    backend = _normalize_backend(backend)
    n = len(model.words)
    if n < 2:
        raise ContractError("cannot build a list from fewer than 2 words")
    if seed_word is None:
        start = int(np.random.default_rng(rng_seed).integers(n))
    else:
        start = model.index_of(seed_word)
        if start is None:
            raise MembershipError(f"seed word {seed_word!r} is not in model {model.name}")
    vectors = model.vectors
    if backend == EXACT:
        order = _chain_exact(vectors, start)
    else:
        order = _chain_approx(vectors, start, n_neighbors)
    words = tuple(model.words[i] for i in order)
    meta = {
        "model": model.name,
        "seed_word": model.words[start],
        "rng_seed": int(rng_seed),
        "metric": "euclidean",
        "backend": backend,
        "size": n,
        "checksum": words_checksum(words),
    }
    return WordList(words, meta)


def save_list(wl: WordList, path):
    """Write a list file: a JSON metadata line, one token per line, then a
    JSON integrity record hashing everything above it."""
    head = json.dumps(wl.meta, sort_keys=True, ensure_ascii=False)
    body = [head, *wl.words]
    digest = hashlib.sha256("\n".join(body).encode("utf-8")).hexdigest()
    tail = json.dumps({"count": len(wl.words), "sha256": digest})
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(body))
        fh.write("\n")
        fh.write(tail)
        fh.write("\n")


def load_list(path) -> WordList:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 3:
        raise ListCorruptionError(f"{path}: too short to be a list file")
    try:
        meta = json.loads(lines[0])
    except json.JSONDecodeError:
        raise ListCorruptionError(f"{path}: unreadable metadata line") from None
    try:
        tail = json.loads(lines[-1])
        count, digest = int(tail["count"]), tail["sha256"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise ListCorruptionError(f"{path}: missing or damaged checksum record (truncated?)") from None
    if not isinstance(meta, dict):
        raise ListCorruptionError(f"{path}: metadata is not an object")
    tokens = lines[1:-1]
    dupes = sorted(t for t, c in Counter(tokens).items() if c > 1)
    if dupes:
        raise ListFormatError(f"{path}: duplicate tokens {dupes[:5]}")
    if count != len(tokens):
        raise ListCorruptionError(f"{path}: expected {count} tokens, found {len(tokens)}")
    actual = hashlib.sha256("\n".join(lines[:-1]).encode("utf-8")).hexdigest()
    if actual != digest:
        raise ListCorruptionError(f"{path}: checksum mismatch")
    if meta.get("checksum") not in (None, words_checksum(tokens)):
        raise ListCorruptionError(f"{path}: word checksum does not match metadata")
    return WordList(tuple(tokens), meta)
