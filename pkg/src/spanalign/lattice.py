"""Semi-Markov lattice over labeled source segmentations.

A path through the lattice picks contiguous source spans left to right and
labels each with a target span or NULL. The path score is the sum of
per-span similarity scores and bucketed transition scores; the carried state
between spans is the end index of the most recent non-NULL label. This
module provides the log partition, posterior marginals, expected
transition-bucket counts, Viterbi decoding with deterministic tie-breaking,
and the training loss with its gradients w.r.t. the score tables.

The dynamic programs run in a compiled kernel when available, or a
pure-numpy fallback otherwise; set ``SPANALIGN_KERNEL=python`` or
``=compiled`` to force one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .data import Span, SpanAlignmentSequence, SpanLabel
from .errors import NumericError, ValidationError
from .scorer import (NULL_BUCKET, NUM_BUCKETS, START_BUCKET, ScoreTables,
                     bucketize, transition_bucket)


def _select_kernel():
    choice = os.environ.get("SPANALIGN_KERNEL", "auto")
    if choice not in ("auto", "compiled", "python"):
        raise ValidationError(f"SPANALIGN_KERNEL must be 'compiled' or "
                              f"'python', got {choice!r}")
    if choice != "python":
        try:
            from . import _kernel
            return _kernel, "compiled"
        except ImportError:
            if choice == "compiled":
                raise
    from . import _kernel_py
    return _kernel_py, "python"


_kernel, KERNEL_BACKEND = _select_kernel()


@dataclass
class Lattice:
    """Index structures plus effective edge scores for one directed pair."""

    tables: ScoreTables
    score: np.ndarray  # (n_spans, n_labels) effective edge scores
    span_id: np.ndarray  # (n, max_span) int64, -1 past sentence end
    label_uv: np.ndarray  # (n_labels, 2) int64, row 0 = (-1, -1) NULL
    trans: np.ndarray  # (m+1, m) transition scores, row m = start state
    bucket_ids: np.ndarray  # (m+1, m) int64 bucket per (state, begin)
    tau_null: float
    n: int
    m: int
    span_cover: np.ndarray  # (n_spans, n) 0/1 span-covers-word
    label_cover: np.ndarray  # (n_labels, m) 0/1 label-covers-word


def span_index(tables: ScoreTables) -> dict[Span, int]:
    return {span: i for i, span in enumerate(tables.spans)}


def label_index(tables: ScoreTables) -> dict[SpanLabel, int]:
    return {label: i for i, label in enumerate(tables.labels)}


def build_lattice(tables: ScoreTables, cost: np.ndarray | None = None) -> Lattice:
    """Assemble kernel inputs; ``cost`` (if given) is added to the edge
    scores for cost-augmented training."""
    n = tables.spans[-1].end + 1
    m = (max(label.end for label in tables.labels[1:]) + 1
         if len(tables.labels) > 1 else 0)
    if m == 0:
        raise ValidationError("lattice needs at least one target word")
    cap = max(len(span) for span in tables.spans)

    span_id = np.full((n, cap), -1, dtype=np.int64)
    for sid, span in enumerate(tables.spans):
        span_id[span.begin, len(span) - 1] = sid

    label_uv = np.full((len(tables.labels), 2), -1, dtype=np.int64)
    for lid, label in enumerate(tables.labels[1:], start=1):
        label_uv[lid] = (label.begin, label.end)

    # trans[c, u]: from carried end c (row m = start) into begin u.
    begins = np.arange(m)
    ends = np.arange(m)
    bucket_ids = np.empty((m + 1, m), dtype=np.int64)
    bucket_ids[:m] = bucketize(begins[None, :] - ends[:, None])
    bucket_ids[m] = START_BUCKET
    trans = tables.tau[bucket_ids]

    score = np.ascontiguousarray(tables.upsilon, dtype=np.float64)
    if cost is not None:
        score = score + cost

    span_cover = np.zeros((len(tables.spans), n))
    for sid, span in enumerate(tables.spans):
        span_cover[sid, span.begin:span.end + 1] = 1.0
    label_cover = np.zeros((len(tables.labels), m))
    for lid, label in enumerate(tables.labels[1:], start=1):
        label_cover[lid, label.begin:label.end + 1] = 1.0

    return Lattice(tables=tables, score=score, span_id=span_id,
                   label_uv=label_uv, trans=np.ascontiguousarray(trans),
                   bucket_ids=bucket_ids, tau_null=float(tables.tau[NULL_BUCKET]),
                   n=n, m=m, span_cover=span_cover, label_cover=label_cover)


def log_partition(lat: Lattice) -> float:
    _, log_z = _kernel.forward(lat.score, lat.span_id, lat.label_uv,
                               lat.trans, lat.tau_null)
    if not np.isfinite(log_z):
        raise NumericError(f"non-finite log partition: {log_z}")
    return log_z


def marginals(lat: Lattice) -> tuple[np.ndarray, np.ndarray, float]:
    """Posterior per (span, label), expected bucket counts, log partition."""
    alpha, log_z = _kernel.forward(lat.score, lat.span_id, lat.label_uv,
                                   lat.trans, lat.tau_null)
    if not np.isfinite(log_z):
        raise NumericError(f"non-finite log partition: {log_z}")
    beta = _kernel.backward(lat.score, lat.span_id, lat.label_uv, lat.trans,
                            lat.tau_null)
    post, counts = _kernel.posteriors(lat.score, lat.span_id, lat.label_uv,
                                      lat.trans, lat.tau_null, lat.bucket_ids,
                                      alpha, beta, log_z)
    return post, counts, log_z


def word_pair_posteriors(lat: Lattice, post: np.ndarray | None = None
                         ) -> np.ndarray:
    """(n, m) matrix of marginal alignment probability per word pair."""
    if post is None:
        post, _, _ = marginals(lat)
    return lat.span_cover.T @ post @ lat.label_cover


def viterbi(lat: Lattice) -> tuple[SpanAlignmentSequence, float]:
    """Best-scoring path, deterministic under ties.

    Tie-breaking prefers, at the earliest differing decision: shorter source
    spans, then non-NULL over NULL, then smaller label begin, then smaller
    label end. Reconstruction walks the max-to-completion table greedily and
    takes the first candidate (in preference order) achieving the table
    value; candidate values are recomputed with the same arithmetic the
    kernel used, so exact float comparison is sound.
    """
    delta = _kernel.viterbi_delta(lat.score, lat.span_id, lat.label_uv,
                                  lat.trans, lat.tau_null)
    n, m = lat.n, lat.m
    n_labels = lat.label_uv.shape[0]
    total = float(delta[0, m])
    if not np.isfinite(total):
        raise NumericError("no finite-scoring path in lattice")

    items: list[tuple[Span, SpanLabel]] = []
    pos, state = 0, m
    while pos < n:
        target = delta[pos, state]
        chosen = None
        for k in range(min(lat.span_id.shape[1], n - pos)):
            end = pos + k
            sid = lat.span_id[pos, k]
            for lid in range(1, n_labels):
                u = lat.label_uv[lid, 0]
                v = lat.label_uv[lid, 1]
                value = (lat.score[sid, lid] + lat.trans[state, u]) \
                    + delta[end + 1, v]
                if value == target:
                    chosen = (end, Span(int(u), int(v)), int(v))
                    break
            if chosen is not None:
                break
            if k == 0:
                value = (lat.score[sid, 0] + lat.tau_null) + delta[pos + 1, state]
                if value == target:
                    chosen = (pos, None, state)
                    break
        if chosen is None:
            raise NumericError("viterbi reconstruction failed to match the "
                               "dynamic-programming table")
        end, label, state = chosen
        items.append((Span(pos, end), label))
        pos = end + 1
    return SpanAlignmentSequence(tuple(items)), total


def gold_bucket_counts(sequence: SpanAlignmentSequence) -> np.ndarray:
    counts = np.zeros(NUM_BUCKETS)
    prev_end: int | None = None
    for _, label in sequence.items:
        counts[transition_bucket(prev_end, label)] += 1.0
        if label is not None:
            prev_end = label.end
    return counts


def sequence_score(tables: ScoreTables, sequence: SpanAlignmentSequence
                   ) -> float:
    """Path score of a specific sequence under the (cost-free) tables."""
    spans = span_index(tables)
    labels = label_index(tables)
    total = 0.0
    prev_end: int | None = None
    for span, label in sequence.items:
        if span not in spans or label not in labels:
            raise ValidationError(f"sequence item ({span}, {label}) is not "
                                  f"representable in the score tables")
        total += tables.upsilon[spans[span], labels[label]]
        total += tables.tau[transition_bucket(prev_end, label)]
        if label is not None:
            prev_end = label.end
    return float(total)


def hamming_cost_table(tables: ScoreTables, gold: SpanAlignmentSequence,
                       cost_scale: float) -> np.ndarray:
    """Per-(span, label) alignment cost against the gold sequence.

    A candidate (span, label) pays ``cost_scale`` for every word in the span
    whose induced target interval (the label itself, for every word in the
    span) differs from the word's gold interval.
    """
    labels = label_index(tables)
    n = tables.spans[-1].end + 1
    word_gold = np.empty(n, dtype=np.int64)
    for span, label in gold.items:
        word_gold[span.begin:span.end + 1] = labels[label]
    mismatch = (word_gold[:, None]
                != np.arange(len(tables.labels))[None, :]).astype(np.float64)
    span_cover = np.zeros((len(tables.spans), n))
    for sid, span in enumerate(tables.spans):
        span_cover[sid, span.begin:span.end + 1] = 1.0
    return cost_scale * (span_cover @ mismatch)


def loss_and_gradients(tables: ScoreTables, gold: SpanAlignmentSequence,
                       cost_scale: float
                       ) -> tuple[float, np.ndarray, np.ndarray]:
    """Cost-augmented negative log-likelihood of the gold sequence.

    Returns (loss, d_upsilon, d_tau): the gradients of the loss w.r.t. the
    similarity table and the transition-bucket scores. The cost term only
    enters the partition (it vanishes on the gold path by construction), and
    is dropped entirely at ``cost_scale == 0``.
    """
    cost = (hamming_cost_table(tables, gold, cost_scale)
            if cost_scale != 0.0 else None)
    lat = build_lattice(tables, cost=cost)
    post, counts, log_z = marginals(lat)

    spans = span_index(tables)
    labels = label_index(tables)
    d_upsilon = post.copy()
    for span, label in gold.items:
        d_upsilon[spans[span], labels[label]] -= 1.0
    d_tau = counts - gold_bucket_counts(gold)
    loss = log_z - sequence_score(tables, gold)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss: {loss}")
    return float(loss), d_upsilon, d_tau
