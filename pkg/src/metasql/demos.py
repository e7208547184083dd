"""Few-shot demonstration store with similarity retrieval.

Embeddings are computed at ingest time and live only in memory; files
on disk hold the raw records. The default provider is fully offline: a
hashed token-frequency vector. A sentence-transformer provider can be
plugged in behind the same interface but is never imported by default.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np

from .errors import DatasetError

EMBEDDING_DIM = 384

_TOKEN_RE = re.compile(r"\w+")


@dataclass(frozen=True)
class Demonstration:
    id: str
    question: str
    relevant_tables: tuple[str, ...]
    sql: str
    source: str = ""


class EmbeddingProvider(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


class HashedTokenEmbedder:
    """Deterministic offline embedding: tokens are md5-hashed into a
    fixed-size frequency vector, L2-normalized. No model weights, no
    network, stable across processes."""

    name = "hashed-token"

    def __init__(self, dim: int = EMBEDDING_DIM):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:8], "big") % self.dim] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


class SentenceEmbedder:
    """Optional provider backed by sentence-transformers. Constructing it
    downloads model weights, so nothing in the package imports it
    implicitly."""

    def __init__(self, model_name: str = "all-MiniLM-L6-v2"):
        from sentence_transformers import SentenceTransformer  # lazy
        self._model = SentenceTransformer(model_name)
        self.name = f"sentence-transformer:{model_name}"
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def embed(self, text: str) -> np.ndarray:
        vec = np.asarray(self._model.encode([text])[0], dtype=np.float64)
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def retrieve_top_k(query: np.ndarray, vectors: np.ndarray, k: int) -> list[int]:
    """Indices of the k most cosine-similar rows, exact scan.

    Ranking matches a brute-force cosine sort for arbitrary (not
    necessarily normalized) vectors; zero-norm rows score 0. Ties break
    toward the lower index; k larger than the corpus returns everything.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if vectors.ndim != 2 or query.shape != (vectors.shape[1],):
        raise ValueError(
            f"shape mismatch: query {query.shape}, vectors {vectors.shape}")
    denom = np.linalg.norm(query) * np.linalg.norm(vectors, axis=1)
    safe = np.where(denom > 0, denom, 1.0)
    # row-wise multiply+sum, not matmul: BLAS kernels can round identical
    # rows differently by position, which would break exact tie-breaking
    dots = (vectors * query).sum(axis=1)
    sims = np.where(denom > 0, dots / safe, 0.0)
    # stable sort on descending similarity keeps the index-ascending
    # tie-break exact even for equal scores
    order = np.argsort(-sims, kind="stable")
    return [int(i) for i in order[:k]]


class DemoStore:
    """In-memory demonstration corpus ordered by id."""

    def __init__(self, provider: EmbeddingProvider | None = None):
        self.provider = provider or HashedTokenEmbedder()
        self._demos: dict[str, Demonstration] = {}
        self._vectors: dict[str, np.ndarray] = {}
        self._matrix_cache: tuple[list[str], np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self._demos)

    @property
    def demos(self) -> list[Demonstration]:
        return [self._demos[i] for i in sorted(self._demos)]

    def get(self, demo_id: str) -> Demonstration | None:
        return self._demos.get(demo_id)

    def add(self, demo: Demonstration) -> None:
        if demo.id in self._demos:
            raise DatasetError(f"duplicate demo id: {demo.id}")
        self._demos[demo.id] = demo
        self._vectors[demo.id] = self.provider.embed(demo.question)
        self._matrix_cache = None

    def extend(self, demos: Iterable[Demonstration]) -> None:
        for demo in demos:
            self.add(demo)

    def _matrix(self) -> tuple[list[str], np.ndarray]:
        if self._matrix_cache is None:
            ids = sorted(self._demos)
            if ids:
                matrix = np.stack([self._vectors[i] for i in ids])
            else:
                matrix = np.zeros((0, self.provider.dim))
            self._matrix_cache = (ids, matrix)
        return self._matrix_cache

    def retrieve(self, question: str, k: int) -> list[Demonstration]:
        """Top-k demos by cosine similarity of the question embedding,
        ties broken by demo id ascending."""
        ids, matrix = self._matrix()
        if not ids or k < 1:
            return []
        query = self.provider.embed(question)
        picked = retrieve_top_k(query, matrix, min(k, len(ids)))
        return [self._demos[ids[i]] for i in picked]


def parse_demo_record(record: dict, where: str) -> Demonstration:
    for key in ("id", "question", "relevant_tables", "sql"):
        if key not in record:
            raise DatasetError(f"{where}: missing field {key!r}")
    tables = record["relevant_tables"]
    if not isinstance(tables, list) or not all(isinstance(t, str) for t in tables):
        raise DatasetError(f"{where}: relevant_tables must be a list of strings")
    if not isinstance(record["id"], str) or not record["id"]:
        raise DatasetError(f"{where}: id must be a non-empty string")
    return Demonstration(
        id=record["id"],
        question=str(record["question"]),
        relevant_tables=tuple(tables),
        sql=str(record["sql"]),
        source=str(record.get("source", "")),
    )


def load_demo_file(path: str) -> list[Demonstration]:
    """Read a line-delimited demo file; errors name the offending record."""
    demos = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            where = f"{path}:{lineno}"
            if isinstance(record, dict) and isinstance(record.get("id"), str):
                where = f"{path} record {record['id']!r}"
            if not isinstance(record, dict):
                raise DatasetError(f"{where}: record must be an object")
            demos.append(parse_demo_record(record, where))
    return demos


def ingest_demos(store: DemoStore, path: str) -> int:
    """Load a demo file into the store; returns the number added."""
    demos = load_demo_file(path)
    store.extend(demos)
    return len(demos)
