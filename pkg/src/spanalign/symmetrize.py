"""Merging directional alignments and phrase-extension post-processing.

All merge functions take both alignments in (source, target) orientation;
the caller transposes the target-to-source decode first.
"""

from __future__ import annotations

import numpy as np

from .data import Span, SpanAlignmentSequence, WordPairs, to_word_pairs
from .errors import ValidationError
from .scorer import ModelParameters, interaction_score, span_representation

MERGE_STRATEGIES = ("intersection", "union", "grow-diag", "bidi-avg", "none")


def intersection(fwd: WordPairs, bwd: WordPairs) -> WordPairs:
    return fwd & bwd


def union(fwd: WordPairs, bwd: WordPairs) -> WordPairs:
    return fwd | bwd


def grow_diag(fwd: WordPairs, bwd: WordPairs) -> WordPairs:
    """Grow the intersection toward the union along adjacent pairs.

    Starting from the intersection, scan the remaining union pairs in
    row-major order and accept any pair that touches an accepted pair in its
    8-neighborhood while its source or target word is still unaligned;
    acceptance takes effect immediately within the scan, and scans repeat
    until a fixpoint (no final step).
    """
    accepted = set(fwd & bwd)
    candidates = sorted((fwd | bwd) - accepted)
    aligned_src = {i for i, _ in accepted}
    aligned_tgt = {j for _, j in accepted}
    changed = True
    while changed:
        changed = False
        for i, j in candidates:
            if (i, j) in accepted:
                continue
            if i in aligned_src and j in aligned_tgt:
                continue
            if any((i + di, j + dj) in accepted
                   for di in (-1, 0, 1) for dj in (-1, 0, 1)
                   if (di, dj) != (0, 0)):
                accepted.add((i, j))
                aligned_src.add(i)
                aligned_tgt.add(j)
                changed = True
    return frozenset(accepted)


def bidi_average(fwd_posteriors: np.ndarray, bwd_posteriors: np.ndarray,
                 threshold: float = 0.4) -> WordPairs:
    """Accept pairs whose two directional posteriors average >= threshold."""
    if fwd_posteriors.shape != bwd_posteriors.shape:
        raise ValidationError(
            f"posterior shapes differ: {fwd_posteriors.shape} vs "
            f"{bwd_posteriors.shape}")
    mean = (fwd_posteriors + bwd_posteriors) / 2.0
    return frozenset((int(i), int(j)) for i, j in np.argwhere(mean >= threshold))


def extend_phrases(decoded: SpanAlignmentSequence, x_src: np.ndarray,
                   x_tgt: np.ndarray, params: ModelParameters,
                   threshold: float = 0.95) -> WordPairs:
    """Grow decoded target spans over adjacent high-similarity words.

    For each non-NULL item, the target span is extended one word at a time
    (rightward first, then leftward) while the logistic-transformed
    similarity between the source span and the extended target span stays
    at or above ``threshold``. Extension stops at sentence edges and at
    target words already aligned by the decoded sequence; extended words do
    not block other extensions. The result is the decoded word pairs plus
    all extension pairs — extension only ever adds.
    """
    blocked = set()
    for _, label in decoded.items:
        if label is not None:
            blocked.update(label.words())

    def similarity(h_src: np.ndarray, candidate: Span) -> float:
        h_tgt, _ = span_representation(x_tgt, candidate, params)
        with np.errstate(over="ignore"):
            return float(1.0 / (1.0 + np.exp(
                -interaction_score(h_src, h_tgt, params))))

    m = x_tgt.shape[0]
    pairs = set(to_word_pairs(decoded))
    for span, label in decoded.items:
        if label is None:
            continue
        h_src, _ = span_representation(x_src, span, params)
        current = label
        while current.end + 1 < m and (current.end + 1) not in blocked:
            candidate = Span(current.begin, current.end + 1)
            if similarity(h_src, candidate) < threshold:
                break
            current = candidate
        while current.begin - 1 >= 0 and (current.begin - 1) not in blocked:
            candidate = Span(current.begin - 1, current.end)
            if similarity(h_src, candidate) < threshold:
                break
            current = candidate
        for x in span.words():
            for y in current.words():
                pairs.add((x, y))
    return frozenset(pairs)
