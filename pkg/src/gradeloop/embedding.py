"""Text embeddings behind a provider contract, plus cosine similarity.

The reference provider is a deterministic signed bag-of-words hasher: tokens
are lowercased runs of letters and digits, each token's 64-bit hash picks a
bucket (hash mod dims) and a sign (+1 if the top bit is clear, else -1), and
the accumulated vector is L2-normalized. The remote provider posts text to an
HTTP endpoint and retries transient failures with exponential backoff.
"""

from __future__ import annotations

import math
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from hashlib import blake2b
from typing import Callable, Sequence

import httpx

from .errors import DimensionMismatch, EmptyText, RemoteUnavailable

DEFAULT_DIMS = 256
NORM_TOLERANCE = 1e-6

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class EmbeddingVector:
    dims: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dims <= 0:
            raise ValueError(f"dims must be positive, got {self.dims}")
        if len(self.values) != self.dims:
            raise ValueError(f"expected {self.dims} components, got {len(self.values)}")
        norm = 0.0
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError("embedding has a non-finite component")
            norm += v * v
        if abs(math.sqrt(norm) - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"embedding norm {math.sqrt(norm)} is not 1")


def unit_vector(values: Sequence[float]) -> EmbeddingVector:
    """Normalize raw components into a unit-length EmbeddingVector."""
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        raise EmptyText("vector has zero magnitude")
    return EmbeddingVector(dims=len(values), values=tuple(v / norm for v in values))


class EmbeddingProviderKind(str, Enum):
    REFERENCE = "reference"
    REMOTE = "remote"


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: EmbeddingProviderKind = EmbeddingProviderKind.REFERENCE
    dims: int = DEFAULT_DIMS
    endpoint_url: str | None = None
    timeout_seconds: float = 10.0
    max_retries: int = 3
    auth_token_env_var: str | None = None

    def __post_init__(self) -> None:
        if self.dims <= 0:
            raise ValueError("dims must be positive")
        if self.kind is EmbeddingProviderKind.REMOTE and not self.endpoint_url:
            raise ValueError("remote embedding provider needs endpoint_url")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric token runs, in order of appearance."""
    return _TOKEN_RE.findall(text.lower())


def _token_hash(token: str) -> int:
    return int.from_bytes(blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


def reference_embedding(text: str, dims: int = DEFAULT_DIMS) -> EmbeddingVector:
    """Deterministic signed hashing embedder; raises EmptyText when no signal."""
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText("text has no alphanumeric tokens")
    acc = [0.0] * dims
    for token in tokens:
        h = _token_hash(token)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        acc[h % dims] += sign
    if all(v == 0.0 for v in acc):
        raise EmptyText("token contributions cancelled to a zero vector")
    return unit_vector(acc)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    if a.dims != b.dims:
        raise DimensionMismatch(f"cosine over {a.dims}-dim and {b.dims}-dim vectors")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(sum(x * x for x in a.values))
    norm_b = math.sqrt(sum(y * y for y in b.values))
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))


class ReferenceEmbedder:
    """Provider wrapper around the deterministic hashing embedder."""

    def __init__(self, dims: int = DEFAULT_DIMS) -> None:
        self.dims = dims

    def embed(self, text: str) -> EmbeddingVector:
        return reference_embedding(text, self.dims)


class RemoteEmbedder:
    """HTTP embedding client with bounded concurrency and retry backoff."""

    def __init__(
        self,
        config: EmbeddingProviderConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        max_in_flight: int = 8,
    ) -> None:
        if config.kind is not EmbeddingProviderKind.REMOTE:
            raise ValueError("RemoteEmbedder requires a remote provider config")
        self.config = config
        self.dims = config.dims
        self._sleep = sleep
        self._slots = threading.Semaphore(max_in_flight)
        self._client = httpx.Client(transport=transport, timeout=config.timeout_seconds)

    def _headers(self) -> dict[str, str]:
        import os

        headers = {"content-type": "application/json"}
        if self.config.auth_token_env_var:
            token = os.environ.get(self.config.auth_token_env_var)
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    def embed(self, text: str) -> EmbeddingVector:
        if not tokenize(text):
            raise EmptyText("text has no alphanumeric tokens")
        delay = 0.5
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt > 0:
                self._sleep(delay)
                delay *= 2
            try:
                with self._slots:
                    response = self._client.post(
                        self.config.endpoint_url or "",
                        json={"input": text},
                        headers=self._headers(),
                    )
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = RemoteUnavailable(f"embedding endpoint returned {response.status_code}")
                continue
            if response.status_code != 200:
                raise RemoteUnavailable(f"embedding endpoint returned {response.status_code}")
            return self._parse(response)
        raise RemoteUnavailable(
            f"embedding endpoint unreachable after {self.config.max_retries + 1} attempts: {last_error}"
        )

    def _parse(self, response: httpx.Response) -> EmbeddingVector:
        try:
            payload = response.json()
            values = [float(v) for v in payload["embedding"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise RemoteUnavailable(f"embedding endpoint returned an unusable body: {exc}") from exc
        if len(values) != self.dims:
            raise DimensionMismatch(f"endpoint returned {len(values)} components, expected {self.dims}")
        if not all(math.isfinite(v) for v in values):
            raise RemoteUnavailable("embedding endpoint returned non-finite components")
        return unit_vector(values)

    def close(self) -> None:
        self._client.close()


def build_embedder(config: EmbeddingProviderConfig, **kwargs) -> ReferenceEmbedder | RemoteEmbedder:
    if config.kind is EmbeddingProviderKind.REFERENCE:
        return ReferenceEmbedder(config.dims)
    return RemoteEmbedder(config, **kwargs)


def embed(text: str, config: EmbeddingProviderConfig, **kwargs) -> EmbeddingVector:
    """Embed one text under the given provider config."""
    embedder = build_embedder(config, **kwargs)
    try:
        return embedder.embed(text)
    finally:
        if isinstance(embedder, RemoteEmbedder):
            embedder.close()
