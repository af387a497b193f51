"""Word-level text obfuscation with metric local differential privacy over
one-dimensional word lists."""

from .core import (DiffractorConfig, ListBank, PerturbationRecord, d_max, perturb_text,
                   perturb_word, sentence_distance, tokenize)
from .embeddings import EmbeddingModel, load_embeddings, vector_of
from .evaluation import DeniabilityStats, estimate_deniability, expected_n_w
from .lists import WordList, build_list, distance, load_list, save_list
from .mechanisms import MechanismConfig, NoiseStream

__version__ = "0.1.0"

__all__ = [
    "DeniabilityStats", "DiffractorConfig", "EmbeddingModel", "ListBank", "MechanismConfig",
    "NoiseStream", "PerturbationRecord", "WordList", "build_list", "d_max", "distance",
    "estimate_deniability", "expected_n_w", "load_embeddings", "load_list", "perturb_text",
    "perturb_word", "save_list", "sentence_distance", "tokenize", "vector_of",
]
