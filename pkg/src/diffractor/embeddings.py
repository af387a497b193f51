"""Loading word embeddings from the plain-text word2vec/GloVe format."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmbeddingFormatError, EmptyModelError


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """Vocabulary plus a ``len(words) x dim`` matrix of vectors.

    Instances are treated as immutable once built; ``vectors`` is marked
    read-only so it can be shared between threads.
    """

    name: str
    words: tuple[str, ...]
    vectors: np.ndarray
    lowercase: bool = False
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.words):
            raise ValueError("vectors must be a (len(words), dim) matrix")
        if len(self.words) < 2:
            raise EmptyModelError(f"model {self.name!r} needs at least 2 words, got {len(self.words)}")
        if not np.isfinite(vectors).all():
            raise ValueError("vectors must be finite")
        index = {w: i for i, w in enumerate(self.words)}
        if len(index) != len(self.words):
            raise ValueError("words must be unique")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return self.normalize(word) in self._index

    def normalize(self, word: str) -> str:
        return word.casefold() if self.lowercase else word

    def index_of(self, word: str) -> int | None:
        return self._index.get(self.normalize(word))


def vector_of(model: EmbeddingModel, word: str) -> np.ndarray | None:
    """Return the row for ``word`` or None when it is out of vocabulary."""
    i = model.index_of(word)
    if i is None:
        return None
    return model.vectors[i]


def _parse_header(parts):
    if len(parts) != 2:
        return None
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        return None
    if count < 0 or dim <= 0:
        return None
    return count, dim


def load_embeddings(path, limit: int | None = None, lowercase: bool = False,
                    name: str | None = None) -> EmbeddingModel:
    """Read a text embedding file.

    The first line may be a ``count dim`` header. Every other line holds a
    token followed by ``dim`` floats. With ``lowercase`` the tokens are
    case-folded and only the first occurrence of each folded token is kept.
    ``limit`` keeps the first ``limit`` usable words in file order.

    Raises:
        EmbeddingFormatError: wrong float count, unparsable or non-finite
            values, or rows disagreeing with the header dimension.
        EmptyModelError: fewer than two usable rows.
        OSError: the file cannot be opened.
    """
    if limit is not None and limit <= 0:
        raise ValueError("limit must be a positive integer")
    words: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim = None
    header_dim = None

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1:
                header = _parse_header(parts)
                if header is not None:
                    header_dim = dim = header[1]
                    continue
            token, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise EmbeddingFormatError("token has no vector values", lineno)
                dim = len(values)
            if len(values) != dim:
                if header_dim is not None:
                    raise EmbeddingFormatError(
                        f"expected {header_dim} values (header dim), got {len(values)}", lineno)
                raise EmbeddingFormatError(f"expected {dim} values, got {len(values)}", lineno)
            try:
                row = [float(v) for v in values]
            except ValueError as exc:
                raise EmbeddingFormatError(f"bad float value: {exc}", lineno) from None
            if not all(math.isfinite(v) for v in row):
                raise EmbeddingFormatError("non-finite vector entry", lineno)
            if lowercase:
                token = token.casefold()
            if token in seen:
                continue
            seen.add(token)
            words.append(token)
            rows.append(row)
            if limit is not None and len(words) >= limit:
                break

    if len(words) < 2:
        raise EmptyModelError(f"{path}: need at least 2 usable rows, found {len(words)}")
    if name is None:
        name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return EmbeddingModel(name=name, words=tuple(words), vectors=np.array(rows, dtype=np.float64),
                          lowercase=lowercase)


def save_embeddings(model: EmbeddingModel, path, header: bool = True):
    """Write ``model`` in the same text format ``load_embeddings`` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(model)} {model.dim}\n")
        for word, row in zip(model.words, model.vectors):
            fh.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")
