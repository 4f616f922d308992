"""Corpus serialization: JSONL sentence-pair records and Pharaoh alignments.

JSONL format, one record per line::

    {"id": "...", "source_tokens": ["w", ...], "target_tokens": ["w", ...],
     "sure": [[i, j], ...], "poss": [[i, j], ...]}

``sure`` and ``poss`` default to empty when absent. Pharaoh format is one
line per pair of whitespace-separated links, ``i-j`` for sure links and
``i?j`` for possible ones.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .data import SentencePair, WordPairs
from .errors import FormatError, ValidationError


def _as_pairs(raw: object, pair_id: str, key: str) -> WordPairs:
    if not isinstance(raw, list):
        raise FormatError(f"record {pair_id!r}: {key!r} must be a list")
    pairs = set()
    for item in raw:
        if (not isinstance(item, (list, tuple)) or len(item) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool)
                           for v in item)):
            raise FormatError(
                f"record {pair_id!r}: {key!r} entries must be [int, int], "
                f"got {item!r}")
        pairs.add((item[0], item[1]))
    return frozenset(pairs)


def _as_tokens(raw: object, pair_id: str, key: str) -> tuple[str, ...]:
    if (not isinstance(raw, list)
            or not all(isinstance(t, str) for t in raw)):
        raise FormatError(
            f"record {pair_id!r}: {key!r} must be a list of strings")
    return tuple(raw)


def read_jsonl(path: str | Path) -> list[SentencePair]:
    """Read a JSONL corpus; errors name the offending line or record id."""
    pairs: list[SentencePair] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{line_no}: malformed JSON "
                                  f"({exc.msg})") from exc
            if not isinstance(record, dict) or "id" not in record:
                raise FormatError(f"{path}:{line_no}: record must be an "
                                  f"object with an 'id' field")
            pair_id = record["id"]
            if not isinstance(pair_id, str):
                raise FormatError(f"{path}:{line_no}: 'id' must be a string")
            if pair_id in seen:
                raise ValidationError(f"{path}:{line_no}: duplicate record "
                                      f"id {pair_id!r}")
            seen.add(pair_id)
            for key in ("source_tokens", "target_tokens"):
                if key not in record:
                    raise FormatError(
                        f"record {pair_id!r}: missing {key!r} field")
            pairs.append(SentencePair(
                pair_id=pair_id,
                src_tokens=_as_tokens(record["source_tokens"], pair_id,
                                      "source_tokens"),
                tgt_tokens=_as_tokens(record["target_tokens"], pair_id,
                                      "target_tokens"),
                sure=_as_pairs(record.get("sure", []), pair_id, "sure"),
                poss=_as_pairs(record.get("poss", []), pair_id, "poss"),
            ))
    return pairs


def write_jsonl(pairs: Iterable[SentencePair], path: str | Path) -> None:
    """Write a JSONL corpus with sorted link lists (deterministic output)."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            record = {
                "id": pair.pair_id,
                "source_tokens": list(pair.src_tokens),
                "target_tokens": list(pair.tgt_tokens),
                "sure": [list(p) for p in sorted(pair.sure)],
                "poss": [list(p) for p in sorted(pair.poss)],
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def parse_pharaoh_line(line: str, where: str = "line") -> tuple[WordPairs, WordPairs]:
    """Parse one Pharaoh line into (sure, possible) link sets."""
    sure, poss = set(), set()
    column = 0
    for token in line.split():
        column = line.index(token, column)
        sep = "-" if "-" in token else "?" if "?" in token else None
        parts = token.split(sep) if sep else [token]
        if sep is None or len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise FormatError(
                f"{where}, column {column + 1}: bad link token {token!r} "
                f"(expected 'i-j' or 'i?j')")
        link = (int(parts[0]), int(parts[1]))
        (sure if sep == "-" else poss).add(link)
        column += len(token)
    return frozenset(sure), frozenset(poss)


def read_pharaoh(path: str | Path) -> list[tuple[WordPairs, WordPairs]]:
    """Read a Pharaoh file: one (sure, possible) pair per input line."""
    alignments = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            alignments.append(
                parse_pharaoh_line(line, where=f"{path}:{line_no}"))
    return alignments


def format_pharaoh_line(sure: WordPairs, poss: WordPairs = frozenset()) -> str:
    """Render one alignment as a Pharaoh line, links sorted by (i, j)."""
    tokens = {pair: f"{pair[0]}?{pair[1]}" for pair in poss}
    tokens.update({pair: f"{pair[0]}-{pair[1]}" for pair in sure})
    return " ".join(tokens[pair] for pair in sorted(tokens))


def write_pharaoh(alignments: Iterable[WordPairs | Sequence[WordPairs]],
                  path: str | Path) -> None:
    """Write Pharaoh lines; items are link sets or (sure, poss) tuples."""
    with open(path, "w", encoding="utf-8") as handle:
        for item in alignments:
            if isinstance(item, frozenset) or isinstance(item, set):
                line = format_pharaoh_line(frozenset(item))
            else:
                sure, poss = item
                line = format_pharaoh_line(sure, poss)
            handle.write(line + "\n")
