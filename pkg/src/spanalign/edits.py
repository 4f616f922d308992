"""Edit programs: KEEP / DEL / ADD / REPLACE tag sequences over a sentence.

A program transforms a source token sequence into a target sequence: KEEP
copies the next source token, DEL drops it, ADD(word) inserts a word, and a
REPLACE-S ... ADD(...) ... REPLACE-E block drops one source token while
inserting its replacement words. Programs are derived from a word alignment
by a minimal-cost dynamic program and always reconstruct the target exactly;
the alignment only selects where REPLACE blocks appear.
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import WordPairs
from .errors import FormatError, ValidationError

KEEP = "KEEP"
DEL = "DEL"
ADD = "ADD"
REPLACE_S = "REPLACE-S"
REPLACE_E = "REPLACE-E"

# One op: (tag, payload). Only ADD carries a payload (the inserted word).
EditOp = tuple[str, str | None]


@dataclass(frozen=True, slots=True)
class EditProgram:
    """A validated op sequence.

    REPLACE-S/REPLACE-E strictly alternate starting with REPLACE-S, and
    each block contains only ADD ops, at least one.
    """

    ops: tuple[EditOp, ...]

    def __post_init__(self) -> None:
        in_block = False
        block_adds = 0
        for tag, payload in self.ops:
            if tag == REPLACE_S:
                if in_block:
                    raise ValidationError("nested REPLACE-S")
                in_block, block_adds = True, 0
            elif tag == REPLACE_E:
                if not in_block:
                    raise ValidationError("REPLACE-E without REPLACE-S")
                if block_adds == 0:
                    raise ValidationError("REPLACE block without ADD")
                in_block = False
            elif tag == ADD:
                if payload is None:
                    raise ValidationError("ADD op without a word")
                block_adds += 1
            elif tag in (KEEP, DEL):
                if in_block:
                    raise ValidationError(f"{tag} inside a REPLACE block")
            else:
                raise ValidationError(f"unknown edit tag {tag!r}")
        if in_block:
            raise ValidationError("unterminated REPLACE block")


# Costs: KEEP is free, REPLACE is cheaper than a DEL+ADD pair, DEL/ADD are
# unit cost. All values are exact binary fractions, so cost sums compare
# exactly.
COST_REPLACE = 0.5
COST_DEL = 1.0
COST_ADD = 1.0


def _replace_eligible(alignment: WordPairs) -> set[tuple[int, int]]:
    """Aligned pairs eligible for REPLACE: one-to-one on both sides."""
    src_degree: dict[int, int] = {}
    tgt_degree: dict[int, int] = {}
    for i, j in alignment:
        src_degree[i] = src_degree.get(i, 0) + 1
        tgt_degree[j] = tgt_degree.get(j, 0) + 1
    return {(i, j) for i, j in alignment
            if src_degree[i] == 1 and tgt_degree[j] == 1}


def derive_program(source_tokens: list[str] | tuple[str, ...],
                   target_tokens: list[str] | tuple[str, ...],
                   alignment: WordPairs = frozenset()) -> EditProgram:
    """Minimal-cost edit program turning source into target.

    KEEP applies when tokens are identical (cost 0); REPLACE (cost 0.5)
    when the position pair is a one-to-one aligned pair with differing
    tokens, emitted as REPLACE-S, ADD(target word), REPLACE-E; DEL and ADD
    cost 1. Ties prefer KEEP, then REPLACE, then DEL, then ADD. Aligned
    pairs not on the chosen path are discarded.
    """
    src = list(source_tokens)
    tgt = list(target_tokens)
    n, m = len(src), len(tgt)
    eligible = _replace_eligible(alignment)

    # suffix[i][j]: minimal cost to transform src[i:] into tgt[j:].
    suffix = [[0.0] * (m + 1) for _ in range(n + 1)]
    for j in range(m - 1, -1, -1):
        suffix[n][j] = suffix[n][j + 1] + COST_ADD
    for i in range(n - 1, -1, -1):
        suffix[i][m] = suffix[i + 1][m] + COST_DEL
        for j in range(m - 1, -1, -1):
            best = suffix[i + 1][j] + COST_DEL
            best = min(best, suffix[i][j + 1] + COST_ADD)
            if src[i] == tgt[j]:
                best = min(best, suffix[i + 1][j + 1])
            elif (i, j) in eligible:
                best = min(best, suffix[i + 1][j + 1] + COST_REPLACE)
            suffix[i][j] = best

    ops: list[EditOp] = []
    i, j = 0, 0
    while i < n or j < m:
        here = suffix[i][j]
        if i < n and j < m and src[i] == tgt[j] \
                and here == suffix[i + 1][j + 1]:
            ops.append((KEEP, None))
            i, j = i + 1, j + 1
        elif i < n and j < m and (i, j) in eligible and src[i] != tgt[j] \
                and here == suffix[i + 1][j + 1] + COST_REPLACE:
            ops.extend([(REPLACE_S, None), (ADD, tgt[j]), (REPLACE_E, None)])
            i, j = i + 1, j + 1
        elif i < n and here == suffix[i + 1][j] + COST_DEL:
            ops.append((DEL, None))
            i += 1
        else:
            ops.append((ADD, tgt[j]))
            j += 1
    return EditProgram(tuple(ops))


def apply_program(source_tokens: list[str] | tuple[str, ...],
                  program: EditProgram) -> list[str]:
    """Run a program against a source sentence, validating consumption."""
    out: list[str] = []
    i = 0
    for tag, payload in program.ops:
        if tag in (KEEP, DEL, REPLACE_S):
            if i >= len(source_tokens):
                raise ValidationError(
                    "program consumes more source tokens than available")
            if tag == KEEP:
                out.append(source_tokens[i])
            i += 1
        elif tag == ADD:
            out.append(payload)
    if i != len(source_tokens):
        raise ValidationError(
            f"program consumed {i} of {len(source_tokens)} source tokens")
    return out


def _escape(word: str) -> str:
    out = []
    for ch in word:
        if ch == "\\" or ch == ")" or ch.isspace():
            out.append("\\")
        out.append(ch)
    return "".join(out)


def format_program(program: EditProgram) -> str:
    """One-line form: space-separated tags, ADD payloads parenthesized with
    backslash escaping of backslash, ')' and whitespace."""
    parts = []
    for tag, payload in program.ops:
        parts.append(f"ADD({_escape(payload)})" if tag == ADD else tag)
    return " ".join(parts)


def parse_program(line: str, where: str = "program") -> EditProgram:
    """Inverse of format_program."""
    ops: list[EditOp] = []
    pos = 0
    length = len(line)
    while pos < length:
        if line[pos].isspace():
            pos += 1
            continue
        if line.startswith("ADD(", pos):
            pos += 4
            word = []
            while pos < length:
                ch = line[pos]
                if ch == "\\":
                    if pos + 1 >= length:
                        raise FormatError(f"{where}: dangling escape")
                    word.append(line[pos + 1])
                    pos += 2
                elif ch == ")":
                    pos += 1
                    break
                elif ch.isspace():
                    raise FormatError(
                        f"{where}: unescaped whitespace inside ADD()")
                else:
                    word.append(ch)
                    pos += 1
            else:
                raise FormatError(f"{where}: unterminated ADD(")
            ops.append((ADD, "".join(word)))
            continue
        end = pos
        while end < length and not line[end].isspace():
            end += 1
        tag = line[pos:end]
        if tag not in (KEEP, DEL, REPLACE_S, REPLACE_E):
            raise FormatError(f"{where}: unknown op {tag!r}")
        ops.append((tag, None))
        pos = end
    try:
        return EditProgram(tuple(ops))
    except ValidationError as exc:
        raise FormatError(f"{where}: {exc}") from exc
