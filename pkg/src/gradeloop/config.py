"""Service configuration: storage paths, providers, and runtime knobs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .agent import LLMProviderConfig, LLMProviderKind
from .embedding import EmbeddingProviderConfig, EmbeddingProviderKind
from .errors import IoFailure, SchemaViolation


@dataclass(frozen=True)
class ServiceConfig:
    corpus_path: Path
    index_path: Path
    assessment_store_path: Path
    submission_store_path: Path
    listen_address: str = "127.0.0.1:8400"
    rubric_path: Path | None = None
    embedding: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    llm: LLMProviderConfig = field(default_factory=LLMProviderConfig)
    default_k: int = 5
    parallelism: int = 4
    auto_approve: bool = False
    api_token_env_var: str = "GRADELOOP_API_TOKEN"

    def __post_init__(self) -> None:
        if self.default_k < 1:
            raise ValueError("default_k must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        paths = [self.corpus_path, self.index_path, self.assessment_store_path, self.submission_store_path]
        if len({str(p) for p in paths}) != len(paths):
            raise ValueError("store paths must be distinct")

    @property
    def host(self) -> str:
        host, _sep, _port = self.listen_address.rpartition(":")
        return host or "127.0.0.1"

    @property
    def port(self) -> int:
        _host, _sep, port = self.listen_address.rpartition(":")
        try:
            return int(port)
        except ValueError:
            raise ValueError(f"listen_address {self.listen_address!r} has no numeric port") from None


def config_from_dict(raw: dict, base_dir: Path | None = None) -> ServiceConfig:
    """Build a ServiceConfig from parsed JSON, resolving relative paths."""

    def path_of(key: str, default: str) -> Path:
        value = raw.get(key, default)
        p = Path(value)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return p

    embedding_raw = raw.get("embedding", {})
    embedding = EmbeddingProviderConfig(
        kind=EmbeddingProviderKind(embedding_raw.get("kind", "reference")),
        dims=int(embedding_raw.get("dims", 256)),
        endpoint_url=embedding_raw.get("endpoint_url"),
        timeout_seconds=float(embedding_raw.get("timeout_seconds", 10.0)),
        max_retries=int(embedding_raw.get("max_retries", 3)),
        auth_token_env_var=embedding_raw.get("auth_token_env_var"),
    )
    llm_raw = raw.get("llm", {})
    script_path = llm_raw.get("script_path")
    if script_path is not None:
        script_path = Path(script_path)
        if base_dir is not None and not script_path.is_absolute():
            script_path = base_dir / script_path
    llm = LLMProviderConfig(
        kind=LLMProviderKind(llm_raw.get("kind", "scripted")),
        script_path=script_path,
        endpoint_url=llm_raw.get("endpoint_url"),
        temperature=float(llm_raw.get("temperature", 0.0)),
        max_output_repair_attempts=int(llm_raw.get("max_output_repair_attempts", 2)),
        timeout_seconds=float(llm_raw.get("timeout_seconds", 30.0)),
        auth_token_env_var=llm_raw.get("auth_token_env_var"),
    )
    rubric_path = raw.get("rubric_path")
    if rubric_path is not None:
        rubric_path = Path(rubric_path)
        if base_dir is not None and not rubric_path.is_absolute():
            rubric_path = base_dir / rubric_path
    return ServiceConfig(
        corpus_path=path_of("corpus_path", "corpus.jsonl"),
        index_path=path_of("index_path", "index.jsonl"),
        assessment_store_path=path_of("assessment_store_path", "assessments.jsonl"),
        submission_store_path=path_of("submission_store_path", "submissions.jsonl"),
        listen_address=str(raw.get("listen_address", "127.0.0.1:8400")),
        rubric_path=rubric_path,
        embedding=embedding,
        llm=llm,
        default_k=int(raw.get("default_k", 5)),
        parallelism=int(raw.get("parallelism", 4)),
        auto_approve=bool(raw.get("auto_approve", False)),
        api_token_env_var=str(raw.get("api_token_env_var", "GRADELOOP_API_TOKEN")),
    )


def load_config(path: Path) -> ServiceConfig:
    """Load a JSON config file; relative paths resolve beside the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation("config", f"{path} is not valid JSON: {exc}") from exc
    try:
        return config_from_dict(raw, base_dir=path.parent.resolve())
    except (ValueError, KeyError, TypeError) as exc:
        raise SchemaViolation("config", str(exc)) from exc
