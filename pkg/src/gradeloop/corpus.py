"""Knowledge corpus: document model, ingestion, and the JSONL-backed store.

Documents are deduplicated by the SHA-256 of their trimmed text. Inbox files
may start with a front-matter block (lines between two ``---`` lines, each
``key: value``) setting doc_type, source_name, and cohort.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .embedding import EmbeddingVector
from .errors import EmptyDocument, IoFailure, UnknownDocType
from .storage import append_record, now_utc_iso, read_records, sha256_hex


class DocType(str, Enum):
    RUBRIC = "rubric"
    EXEMPLAR_ESSAY = "exemplar_essay"
    INSTRUCTOR_FEEDBACK = "instructor_feedback"
    APPROVED_FEEDBACK = "approved_feedback"


@dataclass(frozen=True)
class Provenance:
    submission_id: str
    reviewer_id: str
    approved_at: str

    def to_record(self) -> dict:
        return {
            "submission_id": self.submission_id,
            "reviewer_id": self.reviewer_id,
            "approved_at": self.approved_at,
        }

    @classmethod
    def from_record(cls, raw: dict) -> "Provenance":
        return cls(
            submission_id=str(raw["submission_id"]),
            reviewer_id=str(raw["reviewer_id"]),
            approved_at=str(raw["approved_at"]),
        )


@dataclass(frozen=True)
class Document:
    id: str
    doc_type: DocType
    text: str
    source_name: str
    ingested_at: str
    cohort: str | None = None
    provenance: Provenance | None = None
    embedding: EmbeddingVector | None = None

    def __post_init__(self) -> None:
        if not self.text or self.text != self.text.strip():
            raise ValueError("document text must be non-empty and trimmed")
        if (self.doc_type is DocType.APPROVED_FEEDBACK) != (self.provenance is not None):
            raise ValueError("provenance is required exactly when doc_type is approved_feedback")

    @property
    def word_count(self) -> int:
        return len(self.text.split())

    @property
    def digest(self) -> str:
        return sha256_hex(self.text)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "doc_type": self.doc_type.value,
            "text": self.text,
            "source_name": self.source_name,
            "ingested_at": self.ingested_at,
            "cohort": self.cohort,
            "provenance": self.provenance.to_record() if self.provenance else None,
            "embedding": list(self.embedding.values) if self.embedding else None,
        }

    @classmethod
    def from_record(cls, raw: dict) -> "Document":
        embedding = raw.get("embedding")
        provenance = raw.get("provenance")
        return cls(
            id=str(raw["id"]),
            doc_type=DocType(raw["doc_type"]),
            text=str(raw["text"]),
            source_name=str(raw["source_name"]),
            ingested_at=str(raw["ingested_at"]),
            cohort=raw.get("cohort"),
            provenance=Provenance.from_record(provenance) if provenance else None,
            embedding=EmbeddingVector(len(embedding), tuple(embedding)) if embedding else None,
        )


def _coerce_doc_type(doc_type: DocType | str) -> DocType:
    if isinstance(doc_type, DocType):
        return doc_type
    try:
        return DocType(doc_type)
    except ValueError:
        supported = ", ".join(d.value for d in DocType)
        raise UnknownDocType(f"doc_type {doc_type!r} is not one of: {supported}") from None


class CorpusStore:
    """Append-structured document store with latest-record-wins semantics."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        docs: dict[str, Document] = {}
        for raw in read_records(self.path):
            doc = Document.from_record(raw)
            docs[doc.id] = doc
        self._docs = docs

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def get(self, doc_id: str) -> Document | None:
        return self._docs.get(doc_id)

    def list(self, doc_type: DocType | None = None, cohort: str | None = None) -> list[Document]:
        docs = list(self._docs.values())
        if doc_type is not None:
            docs = [d for d in docs if d.doc_type is doc_type]
        if cohort is not None:
            docs = [d for d in docs if d.cohort == cohort]
        return docs

    def digests(self) -> set[str]:
        return {doc.digest for doc in self._docs.values()}

    def _persist(self, doc: Document) -> None:
        append_record(self.path, doc.to_record())
        docs = dict(self._docs)
        docs[doc.id] = doc
        self._docs = docs

    def add(self, doc: Document) -> None:
        with self._lock:
            self._persist(doc)

    def set_embedding(self, doc_id: str, embedding: EmbeddingVector) -> Document:
        with self._lock:
            doc = self._docs.get(doc_id)
            if doc is None:
                raise IoFailure(f"document {doc_id!r} is not in the store")
            updated = replace(doc, embedding=embedding)
            self._persist(updated)
            return updated


def fresh_doc_id(text: str, taken: set[str]) -> str:
    """Content-derived document id, suffixed if the digest prefix is taken."""
    base = f"doc-{sha256_hex(text)[:12]}"
    if base not in taken:
        return base
    suffix = 2
    while f"{base}-{suffix}" in taken:
        suffix += 1
    return f"{base}-{suffix}"


def ingest_document(
    store: CorpusStore,
    raw_text: str,
    doc_type: DocType | str,
    source_name: str,
    cohort: str | None = None,
    *,
    provenance: Provenance | None = None,
) -> Document:
    """Trim, validate, and persist one document; returns the stored record."""
    kind = _coerce_doc_type(doc_type)
    text = raw_text.strip()
    if not text:
        raise EmptyDocument(f"{source_name}: document is empty after trimming")
    doc = Document(
        id=fresh_doc_id(text, set(store._docs)),
        doc_type=kind,
        text=text,
        source_name=source_name,
        ingested_at=now_utc_iso(),
        cohort=cohort,
        provenance=provenance,
    )
    store.add(doc)
    return doc


@dataclass(frozen=True)
class ScanError:
    path: str
    reason: str


@dataclass(frozen=True)
class ScanResult:
    documents: list[Document]
    errors: list[ScanError]
    skipped: int = 0


_FRONT_MATTER_KEYS = {"doc_type", "source_name", "cohort"}


def parse_front_matter(text: str) -> tuple[dict[str, str], str]:
    """Split optional leading ``---`` metadata from the document body."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "---":
        return {}, text
    meta: dict[str, str] = {}
    for pos in range(1, len(lines)):
        line = lines[pos].strip()
        if line == "---":
            return meta, "\n".join(lines[pos + 1 :])
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"front matter line {pos + 1} is not 'key: value'")
        key = key.strip()
        if key not in _FRONT_MATTER_KEYS:
            raise ValueError(f"front matter key {key!r} is not recognised")
        meta[key] = value.strip()
    raise ValueError("front matter block is not closed by '---'")


def scan_inbox(
    store: CorpusStore,
    directory: Path,
    default_doc_type: DocType | str | None = None,
) -> ScanResult:
    """Ingest every new file under a directory; per-file failures are collected."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IoFailure(f"{directory} is not a readable directory")
    documents: list[Document] = []
    errors: list[ScanError] = []
    skipped = 0
    seen = store.digests()
    for path in sorted(p for p in directory.iterdir() if p.is_file()):
        try:
            raw = path.read_bytes().decode("utf-8")
        except OSError as exc:
            errors.append(ScanError(str(path), f"unreadable: {exc}"))
            continue
        except UnicodeDecodeError:
            errors.append(ScanError(str(path), "not valid UTF-8"))
            continue
        try:
            meta, body = parse_front_matter(raw)
        except ValueError as exc:
            errors.append(ScanError(str(path), str(exc)))
            continue
        doc_type = meta.get("doc_type") or default_doc_type
        if doc_type is None:
            errors.append(ScanError(str(path), "no doc_type in front matter and no default given"))
            continue
        body = body.strip()
        if body and sha256_hex(body) in seen:
            skipped += 1
            continue
        try:
            doc = ingest_document(
                store,
                body,
                doc_type,
                source_name=meta.get("source_name") or path.name,
                cohort=meta.get("cohort"),
            )
        except (EmptyDocument, UnknownDocType) as exc:
            errors.append(ScanError(str(path), str(exc)))
            continue
        seen.add(doc.digest)
        documents.append(doc)
    return ScanResult(documents=documents, errors=errors, skipped=skipped)
