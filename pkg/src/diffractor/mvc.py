"""High-dimensional comparator: multivariate noise plus nearest-word remap.

The word's vector is moved by noise with density proportional to
``exp(-eps * ||z||)`` and mapped back to the closest vocabulary vector by
an exhaustive scan. It exists to reproduce speed and memory comparisons,
so the scan is deliberately left unaccelerated.
"""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingModel
from .errors import ContractError, MembershipError


def sample_mvc_noise(dim: int, epsilon: float, rng, size=None) -> np.ndarray:
    """Uniform direction on the sphere times a Gamma(dim, 1/eps) norm."""
    shape = (dim,) if size is None else (size, dim)
    direction = rng.standard_normal(shape)
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    norm = rng.gamma(shape=dim, scale=1.0 / epsilon, size=None if size is None else (size, 1))
    return direction * norm


class MvcMechanism:
    def __init__(self, model: EmbeddingModel, epsilon: float):
        if not epsilon > 0:
            raise ContractError(f"epsilon must be positive, got {epsilon}")
        self.model = model
        self.epsilon = float(epsilon)
        self._sqnorms = np.einsum("ij,ij->i", model.vectors, model.vectors)

    tag = "MVC"

    def perturb(self, word: str, rng) -> str:
        i = self.model.index_of(word)
        if i is None:
            raise MembershipError(f"{word!r} is not in model {self.model.name}")
        vectors = self.model.vectors
        noisy = vectors[i] + sample_mvc_noise(self.model.dim, self.epsilon, rng)
        # exhaustive scan; ||x||^2 - 2 x.v orders words like ||x - v||
        scores = self._sqnorms - 2.0 * (vectors @ noisy)
        return self.model.words[int(np.argmin(scores))]


def mvc_perturb(word: str, mech: MvcMechanism, rng) -> str:
    return mech.perturb(word, rng)
