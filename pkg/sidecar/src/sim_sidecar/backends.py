"""Embedding backends: a pinned sentence-transformers pair when the
checkpoints are available, and a deterministic hashed-token pair that needs no
downloads (CI and offline runs).

Every backend exposes ``model_id`` and ``embed(text) -> 1-D numpy array``;
similarity is always the cosine of mean-pooled embeddings, mapped linearly
from [-1, 1] to [0, 1] by the service layer.
"""

from __future__ import annotations

import hashlib
import unicodedata

import numpy as np

DEFAULT_BASE_CHECKPOINT = "sentence-transformers/all-MiniLM-L6-v2"
DEFAULT_LARGE_CHECKPOINT = "sentence-transformers/bert-large-nli-mean-tokens"


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def _tokens(text: str) -> list[str]:
    out = []
    for word in text.lower().split():
        word = _strip_punct(word)
        if word:
            out.append(word)
    return out


class HashEmbeddingBackend:
    """Mean-pooled hashed-token embeddings; deterministic across runs.

    Each token maps to a fixed pseudo-random unit vector seeded from its
    SHA-256. ``ngram=2`` additionally embeds adjacent-token bigrams, which is
    what distinguishes the "large" variant from the "base" one.
    """

    def __init__(self, dim: int = 256, ngram: int = 1, name: str | None = None):
        self.dim = dim
        self.ngram = ngram
        self.model_id = name or f"hash-embed-{'uni' if ngram == 1 else 'bi'}gram-{dim}-v1"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
        vector = np.random.default_rng(seed).standard_normal(self.dim)
        vector /= np.linalg.norm(vector)
        self._token_cache[token] = vector
        return vector

    def embed(self, text: str) -> np.ndarray:
        tokens = _tokens(text)
        units = list(tokens)
        if self.ngram >= 2:
            units.extend(" ".join(pair) for pair in zip(tokens, tokens[1:]))
        if not units:
            return np.zeros(self.dim)
        return np.mean([self._token_vector(u) for u in units], axis=0)


class SentenceTransformerBackend:
    """Wraps a pinned sentence-transformers checkpoint (mean pooling)."""

    def __init__(self, checkpoint: str):
        from sentence_transformers import SentenceTransformer

        self.model_id = checkpoint
        self._model = SentenceTransformer(checkpoint)

    def embed(self, text: str) -> np.ndarray:
        return np.asarray(self._model.encode([text], show_progress_bar=False)[0], dtype=np.float64)


def hash_backend_pair() -> tuple[HashEmbeddingBackend, HashEmbeddingBackend]:
    return HashEmbeddingBackend(dim=256, ngram=1), HashEmbeddingBackend(dim=512, ngram=2)


def sbert_backend_pair(
    base_checkpoint: str = DEFAULT_BASE_CHECKPOINT,
    large_checkpoint: str = DEFAULT_LARGE_CHECKPOINT,
) -> tuple[SentenceTransformerBackend, SentenceTransformerBackend]:
    return (
        SentenceTransformerBackend(base_checkpoint),
        SentenceTransformerBackend(large_checkpoint),
    )


def load_backends(kind: str = "auto", **kwargs):
    """hash: offline deterministic pair; sbert: pinned checkpoints; auto:
    sbert if loadable, hash otherwise."""
    if kind == "hash":
        return hash_backend_pair()
    if kind == "sbert":
        return sbert_backend_pair(**kwargs)
    if kind == "auto":
        try:
            return sbert_backend_pair(**kwargs)
        except Exception:
            return hash_backend_pair()
    raise ValueError(f"unknown backend kind {kind!r}")
