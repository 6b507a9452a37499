"""Append-structured JSONL persistence helpers.

Two file shapes are used across the engine:

* plain record files: one JSON object per line, appended over time; a record
  with an ``id`` seen before supersedes the earlier one (latest wins).
* digest-sealed files: the same line records followed by one trailer line
  ``#sha256:<hex>`` over every byte before it. These are rewritten whole and
  any mismatch or truncation is treated as corruption.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from .errors import CorruptIndex, IoFailure

_DIGEST_PREFIX = "#sha256:"


def now_utc_iso() -> str:
    """Current UTC time as an ISO-8601 string with second precision."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def append_record(path: Path, record: dict) -> None:
    """Append one record and flush it to disk before returning."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(dump_record(record) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise IoFailure(f"cannot append to {path}: {exc}") from exc


def read_records(path: Path) -> list[dict]:
    """Read all records from a plain record file.

    A torn final line (an interrupted append) is dropped; a malformed line
    anywhere else is an error.
    """
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return []
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    records: list[dict] = []
    lines = raw.splitlines()
    for pos, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            if pos == len(lines) - 1:
                break
            raise IoFailure(f"{path} line {pos + 1} is not valid JSON") from exc
    return records


def write_sealed(path: Path, records: list[dict]) -> None:
    """Atomically rewrite a digest-sealed file from scratch."""
    body = "".join(dump_record(r) + "\n" for r in records)
    payload = body.encode("utf-8")
    digest = hashlib.sha256(payload).hexdigest()
    data = payload + f"{_DIGEST_PREFIX}{digest}\n".encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_sealed(path: Path) -> list[dict]:
    """Read a digest-sealed file, verifying the trailer."""
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise IoFailure(f"{path} does not exist") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    text = data.decode("utf-8", errors="replace")
    lines = text.splitlines(keepends=True)
    if not lines or not lines[-1].startswith(_DIGEST_PREFIX):
        raise CorruptIndex(f"{path} has no integrity trailer")
    trailer = lines[-1]
    stated = trailer[len(_DIGEST_PREFIX):].strip()
    body = "".join(lines[:-1])
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if stated != actual:
        raise CorruptIndex(f"{path} failed its integrity check")
    records: list[dict] = []
    for pos, line in enumerate(body.splitlines()):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorruptIndex(f"{path} line {pos + 1} is not valid JSON") from exc
    return records


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
