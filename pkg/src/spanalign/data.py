"""Core data model: sentence pairs, spans, span alignments, word alignments.

A word alignment is a set of ``(source_index, target_index)`` pairs. A span
alignment segments the source sentence into contiguous spans and labels each
span with either a contiguous target span or NULL; NULL spans always cover
exactly one source word. Gold span alignments are derived from gold word
alignments by ``derive_gold_spans``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ValidationError

# A word alignment: set of (source word index, target word index) pairs.
WordPairs = frozenset[tuple[int, int]]


class Direction(enum.Enum):
    """Alignment direction: which sentence plays the segmented-source role."""

    S2T = "s2t"
    T2S = "t2s"


class Setting(enum.Enum):
    """Which gold links count: sure only, or sure plus possible."""

    SURE = "sure"
    SURE_PLUS_POSS = "sure+poss"

    @classmethod
    def parse(cls, text: str) -> "Setting":
        for member in cls:
            if member.value == text:
                return member
        raise ValidationError(f"unknown setting {text!r}; expected one of "
                              f"{[m.value for m in cls]}")


@dataclass(frozen=True, slots=True, order=True)
class Span:
    """A contiguous, inclusive range of word positions within one sentence."""

    begin: int  # index of first word
    end: int  # index of last word (inclusive)

    def __post_init__(self) -> None:
        if not (0 <= self.begin <= self.end):
            raise ValidationError(f"invalid span ({self.begin}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.begin + 1

    def words(self) -> range:
        return range(self.begin, self.end + 1)

    def covers(self, index: int) -> bool:
        return self.begin <= index <= self.end


# A span label: a target-side Span, or None for NULL (unaligned).
SpanLabel = Span | None


@dataclass(frozen=True, slots=True)
class SentencePair:
    """One corpus record: two tokenized sentences plus gold word alignments."""

    pair_id: str  # unique identifier within a corpus
    src_tokens: tuple[str, ...]  # source-side words
    tgt_tokens: tuple[str, ...]  # target-side words
    sure: WordPairs = frozenset()  # high-confidence gold links
    poss: WordPairs = frozenset()  # additional possible gold links

    def __post_init__(self) -> None:
        if not self.src_tokens or not self.tgt_tokens:
            raise ValidationError(f"pair {self.pair_id!r}: empty sentence")
        if any(not t for t in self.src_tokens + self.tgt_tokens):
            raise ValidationError(f"pair {self.pair_id!r}: empty token")
        for pairs, name in ((self.sure, "sure"), (self.poss, "poss")):
            validate_word_pairs(pairs, len(self.src_tokens),
                                len(self.tgt_tokens),
                                context=f"pair {self.pair_id!r} ({name})")

    def gold_pairs(self, setting: Setting) -> WordPairs:
        if setting is Setting.SURE:
            return self.sure
        return self.sure | self.poss

    def flipped(self) -> "SentencePair":
        """The same pair with source/target roles (and links) swapped."""
        return SentencePair(
            pair_id=self.pair_id,
            src_tokens=self.tgt_tokens,
            tgt_tokens=self.src_tokens,
            sure=transpose_pairs(self.sure),
            poss=transpose_pairs(self.poss),
        )


@dataclass(frozen=True, slots=True)
class SpanAlignmentSequence:
    """A full segmentation of the source sentence into labeled spans.

    Spans tile ``[0, source_length)`` left to right with no gaps or overlaps.
    Each span carries a target ``Span`` label or ``None`` (NULL); NULL labels
    are only permitted on single-word source spans.
    """

    items: tuple[tuple[Span, SpanLabel], ...]

    def __post_init__(self) -> None:
        if not self.items:
            raise ValidationError("empty span alignment sequence")
        expected = 0
        for span, label in self.items:
            if span.begin != expected:
                raise ValidationError(
                    f"source spans do not tile the sentence: expected a span "
                    f"starting at {expected}, got {span}")
            expected = span.end + 1
            if label is None and len(span) != 1:
                raise ValidationError(
                    f"NULL label on multi-word source span {span}")

    @property
    def source_length(self) -> int:
        return self.items[-1][0].end + 1


@dataclass(frozen=True, slots=True)
class GoldDerivation:
    """Result of deriving a gold span alignment from gold word pairs."""

    sequence: SpanAlignmentSequence
    clipped: int  # number of source words whose gold target set was clipped


def validate_word_pairs(pairs: WordPairs, src_len: int, tgt_len: int,
                        context: str = "alignment") -> None:
    """Raise ValidationError unless every pair indexes into both sentences."""
    for i, j in pairs:
        if not (0 <= i < src_len and 0 <= j < tgt_len):
            raise ValidationError(
                f"{context}: pair ({i}, {j}) out of range for sentence "
                f"lengths ({src_len}, {tgt_len})")


def transpose_pairs(pairs: WordPairs) -> WordPairs:
    return frozenset((j, i) for i, j in pairs)


def enumerate_spans(length: int, max_span: int) -> list[Span]:
    """All spans of up to ``max_span`` words, ordered by (begin, end)."""
    return [Span(b, e)
            for b in range(length)
            for e in range(b, min(b + max_span, length))]


def to_word_pairs(sequence: SpanAlignmentSequence) -> WordPairs:
    """Expand a span alignment into its induced word alignment.

    Every aligned span pair contributes its full bipartite product; NULL
    spans contribute nothing.
    """
    pairs = set()
    for span, label in sequence.items:
        if label is None:
            continue
        for x in span.words():
            for y in label.words():
                pairs.add((x, y))
    return frozenset(pairs)


def _canonical_interval(targets: list[int], max_span: int) -> tuple[Span, bool]:
    """Reduce a sorted nonempty gold target set to one interval of <= max_span.

    Returns the interval and whether any gold targets were dropped. A
    contiguous set short enough is kept verbatim; otherwise the longest
    contiguous run wins (leftmost on ties) and is truncated to its first
    ``max_span`` elements.
    """
    if targets[-1] - targets[0] + 1 == len(targets) and len(targets) <= max_span:
        return Span(targets[0], targets[-1]), False
    best_start, best_len = targets[0], 1
    run_start, run_len = targets[0], 1
    for prev, cur in zip(targets, targets[1:]):
        if cur == prev + 1:
            run_len += 1
        else:
            run_start, run_len = cur, 1
        if run_len > best_len:
            best_start, best_len = run_start, run_len
    best_len = min(best_len, max_span)
    return Span(best_start, best_start + best_len - 1), True


def derive_gold_spans(pair: SentencePair, direction: Direction,
                      setting: Setting, max_span: int) -> GoldDerivation:
    """Derive the canonical gold span alignment from gold word pairs.

    Per source word ``w`` (after flipping roles for the t2s direction), the
    gold target set is reduced to one interval by ``_canonical_interval``,
    or to NULL when empty. Maximal runs of consecutive source words sharing
    an identical interval merge into one span, and runs longer than
    ``max_span`` split left-to-right into chunks of ``max_span`` words.
    NULL words always stay single-word spans.

    Returns
    -------
    GoldDerivation
        The derived sequence plus the count of source words whose gold
        target set was not representable and had to be clipped.
    """
    if max_span < 1:
        raise ValidationError(f"max_span must be >= 1, got {max_span}")
    if direction is Direction.T2S:
        pair = pair.flipped()
    pairs = pair.gold_pairs(setting)
    n = len(pair.src_tokens)

    intervals: list[SpanLabel] = []
    clipped = 0
    for w in range(n):
        targets = sorted(j for i, j in pairs if i == w)
        if not targets:
            intervals.append(None)
            continue
        interval, was_clipped = _canonical_interval(targets, max_span)
        intervals.append(interval)
        clipped += was_clipped

    items: list[tuple[Span, SpanLabel]] = []
    w = 0
    while w < n:
        interval = intervals[w]
        if interval is None:
            items.append((Span(w, w), None))
            w += 1
            continue
        run_end = w
        while run_end + 1 < n and intervals[run_end + 1] == interval:
            run_end += 1
        begin = w
        while begin <= run_end:
            end = min(begin + max_span - 1, run_end)
            items.append((Span(begin, end), interval))
            begin = end + 1
        w = run_end + 1

    return GoldDerivation(SpanAlignmentSequence(tuple(items)), clipped)


def components(pairs: WordPairs) -> list[tuple[frozenset[int], frozenset[int]]]:
    """Connected components of the bipartite alignment graph.

    Each component is a (source words, target words) pair; components are
    sorted by (min source index, min target index).
    """
    by_src: dict[int, set[int]] = {}
    by_tgt: dict[int, set[int]] = {}
    for i, j in pairs:
        by_src.setdefault(i, set()).add(j)
        by_tgt.setdefault(j, set()).add(i)

    seen_src: set[int] = set()
    result = []
    for start in sorted(by_src):
        if start in seen_src:
            continue
        comp_src, comp_tgt = set(), set()
        stack: list[tuple[str, int]] = [("s", start)]
        while stack:
            side, node = stack.pop()
            if side == "s":
                if node in comp_src:
                    continue
                comp_src.add(node)
                stack.extend(("t", j) for j in by_src[node])
            else:
                if node in comp_tgt:
                    continue
                comp_tgt.add(node)
                stack.extend(("s", i) for i in by_tgt[node])
        seen_src |= comp_src
        result.append((frozenset(comp_src), frozenset(comp_tgt)))
    result.sort(key=lambda c: (min(c[0]), min(c[1])))
    return result
