"""Pure-numpy lattice kernels (fallback when the compiled kernel is absent).

The lattice state at source position ``pos`` is the end index of the most
recent non-NULL label (0..m-1), or ``m`` when no non-NULL label has occurred
yet. Edges are labeled source spans: a span (b, e) with non-NULL label
(u, v) moves ``pos`` to e+1 and the state to v, scoring
``score[s, l] + trans[c, u]``; a single-word span with the NULL label keeps
the state and scores ``score[s, 0] + tau_null``.

Array conventions shared with the compiled kernel:

* ``score``: (n_spans, n_labels) float64, label 0 is NULL.
* ``span_id``: (n, D) int64; ``span_id[b, k]`` identifies span (b, b+k),
  -1 where b+k exceeds the sentence.
* ``label_uv``: (n_labels, 2) int64; row 0 is (-1, -1) for NULL.
* ``trans``: (m+1, m) float64; ``trans[c, u]`` scores a transition from
  carried state c into a label beginning at u (row m is the start state).
* ``bucket_ids``: (m+1, m) int64 bucket index per (c, u) transition.

Viterbi candidate values are always computed as
``(score + trans) + delta`` / ``(score + tau_null) + delta`` so that
reconstruction can match table entries by exact float equality.
"""

from __future__ import annotations

import numpy as np

NEG_INF = -np.inf


def logsumexp(values: np.ndarray, axis: int | None = None):
    """Stable log-sum-exp that maps all-(-inf) reductions to -inf."""
    peak = np.max(values, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(values - safe), axis=axis,
                            keepdims=True)) + safe
    if axis is None:
        return float(out.ravel()[0])
    return np.squeeze(out, axis=axis)


def _groups_by_begin(label_uv: np.ndarray, m: int) -> list[np.ndarray]:
    """Positions into label rows 1.. grouped by the label's begin index."""
    begins = label_uv[1:, 0]
    return [np.nonzero(begins == u)[0] for u in range(m)]


def _groups_by_end(label_uv: np.ndarray, m: int) -> list[np.ndarray]:
    """Positions into label rows 1.. grouped by the label's end index."""
    ends = label_uv[1:, 1]
    return [np.nonzero(ends == v)[0] for v in range(m)]


def forward(score: np.ndarray, span_id: np.ndarray, label_uv: np.ndarray,
            trans: np.ndarray, tau_null: float) -> tuple[np.ndarray, float]:
    """Forward log-sums. Returns (alpha, log partition)."""
    n, cap = span_id.shape
    m = trans.shape[1]
    label_u = label_uv[1:, 0]
    end_groups = _groups_by_end(label_uv, m)
    alpha = np.full((n + 1, m + 1), NEG_INF)
    alpha[0, m] = 0.0
    for b in range(n):
        row = alpha[b]
        # Factor non-NULL transitions through the label begin index.
        bvec = logsumexp(row[:, None] + trans, axis=0)  # (m,)
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                alpha[b + 1] = np.logaddexp(
                    alpha[b + 1], row + (score[sid, 0] + tau_null))
            vals = bvec[label_u] + score[sid, 1:]
            for v, group in enumerate(end_groups):
                if group.size:
                    alpha[e + 1, v] = np.logaddexp(
                        alpha[e + 1, v], logsumexp(vals[group]))
    return alpha, float(logsumexp(alpha[n]))


def backward(score: np.ndarray, span_id: np.ndarray, label_uv: np.ndarray,
             trans: np.ndarray, tau_null: float) -> np.ndarray:
    """Backward log-sums: beta[pos, c] over completions from pos."""
    n, cap = span_id.shape
    m = trans.shape[1]
    label_v = label_uv[1:, 1]
    begin_groups = _groups_by_begin(label_uv, m)
    beta = np.full((n + 1, m + 1), NEG_INF)
    beta[n, :] = 0.0
    for b in range(n - 1, -1, -1):
        out = np.full(m + 1, NEG_INF)
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                out = np.logaddexp(out, (score[sid, 0] + tau_null)
                                   + beta[b + 1])
            vals = score[sid, 1:] + beta[e + 1, label_v]
            cvec = np.array([logsumexp(vals[group])
                             for group in begin_groups])
            out = np.logaddexp(out, logsumexp(trans + cvec[None, :], axis=1))
        beta[b] = out
    return beta


def posteriors(score: np.ndarray, span_id: np.ndarray, label_uv: np.ndarray,
               trans: np.ndarray, tau_null: float, bucket_ids: np.ndarray,
               alpha: np.ndarray, beta: np.ndarray, log_z: float
               ) -> tuple[np.ndarray, np.ndarray]:
    """Per-(span, label) posteriors and expected transition-bucket counts."""
    n, cap = span_id.shape
    m = trans.shape[1]
    label_u = label_uv[1:, 0]
    label_v = label_uv[1:, 1]
    begin_groups = _groups_by_begin(label_uv, m)
    post = np.zeros(score.shape)
    counts = np.zeros(15)
    for b in range(n):
        row = alpha[b]
        bvec = logsumexp(row[:, None] + trans, axis=0)
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                post[sid, 0] = np.exp(logsumexp(
                    row + (score[sid, 0] + tau_null) + beta[b + 1]) - log_z)
            post[sid, 1:] = np.exp(
                bvec[label_u] + score[sid, 1:] + beta[e + 1, label_v] - log_z)
            # Joint (state, begin) posterior mass for bucket counts.
            vals = score[sid, 1:] + beta[e + 1, label_v]
            cvec = np.array([logsumexp(vals[group])
                             for group in begin_groups])
            mass = np.exp(row[:, None] + trans + cvec[None, :] - log_z)
            np.add.at(counts, bucket_ids.ravel(), mass.ravel())
    counts[14] = post[:, 0].sum()
    return post, counts


def viterbi_delta(score: np.ndarray, span_id: np.ndarray,
                  label_uv: np.ndarray, trans: np.ndarray,
                  tau_null: float) -> np.ndarray:
    """Max-score-to-completion table delta[pos, c]."""
    n, cap = span_id.shape
    m = trans.shape[1]
    label_u = label_uv[1:, 0]
    label_v = label_uv[1:, 1]
    delta = np.full((n + 1, m + 1), NEG_INF)
    delta[n, :] = 0.0
    for b in range(n - 1, -1, -1):
        best = np.full(m + 1, NEG_INF)
        for k in range(min(cap, n - b)):
            e = b + k
            sid = span_id[b, k]
            if k == 0:
                best = np.maximum(best, (score[sid, 0] + tau_null)
                                  + delta[b + 1])
            cand = (score[sid, 1:][None, :] + trans[:, label_u]) \
                + delta[e + 1, label_v][None, :]
            best = np.maximum(best, cand.max(axis=1))
        delta[b] = best
    return delta
