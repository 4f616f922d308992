"""Sentence-pair corpus input: JSONL, one record per line.

Only ``id``, ``source_tokens``, and ``target_tokens`` matter here;
alignment keys in the same records are ignored. Tokens must be non-empty
strings, since every word has to receive an embedding row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ExportError


@dataclass(frozen=True)
class PairRecord:
    """One corpus entry as the exporter sees it."""

    pair_id: str
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]


def _as_tokens(raw: object, where: str, key: str) -> tuple[str, ...]:
    if (not isinstance(raw, list) or not raw
            or not all(isinstance(t, str) and t for t in raw)):
        raise ExportError(
            f"{where}: {key!r} must be a non-empty list of non-empty strings")
    return tuple(raw)


def read_corpus(path: str | Path) -> list[PairRecord]:
    """All records of a JSONL corpus, in file order."""
    records: list[PairRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{line_no}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{where}: invalid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise ExportError(f"{where}: expected a JSON object")
            pair_id = raw.get("id")
            if not isinstance(pair_id, str) or not pair_id:
                raise ExportError(f"{where}: 'id' must be a non-empty string")
            if pair_id in seen:
                raise ExportError(f"{where}: duplicate pair id {pair_id!r}")
            seen.add(pair_id)
            records.append(PairRecord(
                pair_id=pair_id,
                src_tokens=_as_tokens(raw.get("source_tokens"), where,
                                      "source_tokens"),
                tgt_tokens=_as_tokens(raw.get("target_tokens"), where,
                                      "target_tokens")))
    if not records:
        raise ExportError(f"{path}: corpus has no records")
    return records
