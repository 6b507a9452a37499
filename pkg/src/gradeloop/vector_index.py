"""Exact cosine-similarity index over embedded documents.

The index is a flat scan: every query scores all candidate documents and
sorts by (similarity descending, doc_id ascending), so results are exact and
deterministic. Persistence reuses the corpus line-record format with a
trailing SHA-256 integrity line.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

from .corpus import DocType, Document
from .embedding import EmbeddingVector
from .errors import DimensionMismatch, MissingEmbedding
from .storage import read_sealed, write_sealed


@dataclass(frozen=True)
class QueryFilter:
    doc_types: frozenset[DocType] = frozenset()
    cohort: str | None = None

    def admits(self, doc: Document) -> bool:
        if self.doc_types and doc.doc_type not in self.doc_types:
            return False
        if self.cohort is not None and doc.cohort != self.cohort:
            return False
        return True


@dataclass(frozen=True)
class RetrievalResult:
    doc_id: str
    doc_type: DocType
    similarity: float
    rank: int

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "doc_type": self.doc_type.value,
            "similarity": self.similarity,
            "rank": self.rank,
        }

    @classmethod
    def from_record(cls, raw: dict) -> "RetrievalResult":
        return cls(
            doc_id=str(raw["doc_id"]),
            doc_type=DocType(raw["doc_type"]),
            similarity=float(raw["similarity"]),
            rank=int(raw["rank"]),
        )


class VectorIndex:
    """Flat exact-search index; writes lock, reads run on immutable snapshots."""

    def __init__(self, dims: int, path: Path | None = None) -> None:
        if dims <= 0:
            raise ValueError("dims must be positive")
        self.dims = dims
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._docs: dict[str, Document] = {}

    @classmethod
    def load(cls, path: Path, dims: int | None = None) -> "VectorIndex":
        """Rebuild an index from its sealed file, verifying integrity."""
        records = read_sealed(Path(path))
        docs = [Document.from_record(r) for r in records]
        if dims is None:
            dims = docs[0].embedding.dims if docs and docs[0].embedding else 256
        index = cls(dims=dims, path=path)
        for doc in docs:
            if doc.embedding is None:
                raise MissingEmbedding(f"stored document {doc.id!r} has no embedding")
            if doc.embedding.dims != dims:
                raise DimensionMismatch(
                    f"stored document {doc.id!r} is {doc.embedding.dims}-dim, index is {dims}-dim"
                )
            index._docs[doc.id] = doc
        return index

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def get(self, doc_id: str) -> Document | None:
        return self._docs.get(doc_id)

    def ids(self) -> list[str]:
        return sorted(self._docs)

    def _persist_locked(self) -> None:
        if self.path is not None:
            records = [self._docs[doc_id].to_record() for doc_id in sorted(self._docs)]
            write_sealed(self.path, records)

    def upsert(self, doc: Document) -> None:
        """Insert or replace one embedded document, durably when path-backed."""
        if doc.embedding is None:
            raise MissingEmbedding(f"document {doc.id!r} has no embedding")
        if doc.embedding.dims != self.dims:
            raise DimensionMismatch(
                f"document {doc.id!r} is {doc.embedding.dims}-dim, index is {self.dims}-dim"
            )
        with self._lock:
            docs = dict(self._docs)
            docs[doc.id] = doc
            self._docs = docs
            self._persist_locked()

    def remove(self, doc_id: str) -> bool:
        with self._lock:
            if doc_id not in self._docs:
                return False
            docs = dict(self._docs)
            del docs[doc_id]
            self._docs = docs
            self._persist_locked()
            return True

    def persist(self, path: Path | None = None) -> None:
        with self._lock:
            if path is not None:
                self.path = Path(path)
            if self.path is None:
                raise ValueError("index has no backing path")
            self._persist_locked()

    def query(
        self,
        vector: EmbeddingVector,
        k: int,
        query_filter: QueryFilter | None = None,
    ) -> list[RetrievalResult]:
        """Top-k most similar documents, ties broken by ascending doc_id."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if vector.dims != self.dims:
            raise DimensionMismatch(f"query is {vector.dims}-dim, index is {self.dims}-dim")
        docs = self._docs
        admitted = query_filter.admits if query_filter else (lambda _doc: True)
        scored: list[tuple[float, str, DocType]] = []
        for doc_id, doc in docs.items():
            if not admitted(doc):
                continue
            assert doc.embedding is not None
            # Stored vectors are unit length, so the dot product is the cosine.
            dot = sum(a * b for a, b in zip(vector.values, doc.embedding.values))
            scored.append((max(-1.0, min(1.0, dot)), doc_id, doc.doc_type))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [
            RetrievalResult(doc_id=doc_id, doc_type=doc_type, similarity=sim, rank=pos + 1)
            for pos, (sim, doc_id, doc_type) in enumerate(scored[:k])
        ]
