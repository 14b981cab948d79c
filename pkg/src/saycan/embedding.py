"""Hashed bag-of-words sentence embeddings and cosine projection.

Not a semantic model: vectors capture lexical overlap only, which is enough
for the projection baselines to behave like their sentence-encoder
counterparts on in-vocabulary text.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx
import numpy as np

_PUNCT = re.compile(r"[^\w\s]+")
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray
    norm: float

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.norm == other.norm and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


def tokenize(text: str) -> list[str]:
    return _PUNCT.sub(" ", text.lower()).split()


class Embedder(Protocol):
    def embed(self, text: str) -> EmbeddingVector: ...


class HashingEmbedder:
    def __init__(self, dim: int = 256, seed: int = 0) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, int] = {}

    def bucket(self, token: str) -> int:
        b = self._cache.get(token)
        if b is None:
            h = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self.seed.to_bytes(8, "little"))
            b = int.from_bytes(h.digest(), "little") % self.dim
            self._cache[token] = b
        return b

    def counts(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for tok in tokenize(text):
            vec[self.bucket(tok)] += 1.0
        return vec

    def embed(self, text: str) -> EmbeddingVector:
        vec = self.counts(text)
        n = float(np.linalg.norm(vec))
        if n > 0:
            vec = vec / n
            n = float(np.linalg.norm(vec))
        return EmbeddingVector(vec, n)


class RemoteEmbedder:
    """Adapter for an external encoder: ``POST /embed {"texts": [...]}`` -> ``{"embeddings": [[...]]}``."""

    def __init__(self, base_url: str, transport: httpx.BaseTransport | None = None, timeout: float = 30.0) -> None:
        self._client = httpx.Client(base_url=base_url, transport=transport, timeout=timeout)

    def embed(self, text: str) -> EmbeddingVector:
        resp = self._client.post("/embed", json={"texts": [text]})
        resp.raise_for_status()
        vec = np.asarray(resp.json()["embeddings"][0], dtype=float)
        return EmbeddingVector(vec, float(np.linalg.norm(vec)))


_DEFAULT = HashingEmbedder()


def embed(text: str, embedder: Embedder | None = None) -> EmbeddingVector:
    return (embedder or _DEFAULT).embed(text)


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if u.norm == 0 or v.norm == 0:
        return 0.0
    c = float(np.dot(u.values, v.values)) / (u.norm * v.norm)
    return min(1.0, max(-1.0, c))


def project_to_nearest(
    text: str, candidates: Sequence[str], embedder: Embedder | None = None
) -> tuple[str, float]:
    """Candidate with the highest cosine to ``text``.

    Near-ties go to an exact string match if there is one, else to the
    lexicographically smallest candidate. The exact-match rule keeps
    projection idempotent on labels that differ only in word order.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    q = embed(text, embedder)
    scored = [(cosine(q, embed(c, embedder)), c) for c in candidates]
    best = max(s for s, _ in scored)
    tied = [c for s, c in scored if best - s <= TIE_TOL]
    winner = text if text in tied else min(tied)
    return winner, best
