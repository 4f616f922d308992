"""Span scoring model: representations, similarity scores, transitions.

The model scores a (source span, target label) pair with a similarity score
``upsilon`` and scores adjacent label transitions with a bucketed distance
score ``tau``:

* A span of token embeddings is pooled by softmax attention against a
  learned query, concatenated with its endpoint embeddings, and layer
  normalized, giving a ``3*dim`` representation. The NULL label has its own
  learned free vector, used raw (not normalized).
* ``upsilon(h_s, h_t)`` feeds ``[h_s; h_t; |h_s - h_t|; h_s * h_t]`` through
  a one-hidden-layer network with per-channel PReLU activations.
* ``tau`` embeds the signed distance from the previous non-NULL label's end
  to the current label's begin into 13 buckets, plus one bucket for the
  first non-NULL label and one for transitions into NULL; bucket embeddings
  are projected linearly to a scalar.

All parameters are stored in float64 carriers whose values are kept exactly
float32-representable (initialization and every optimizer step round through
float32), so checkpoints serialize to float32 losslessly while all math and
finite differences run in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .data import Span, SpanLabel, enumerate_spans
from .errors import ValidationError

LN_EPS = 1e-5  # layer-norm variance epsilon

# Signed-distance bucket boundaries: bucket k holds boundaries[k-1] < d <=
# boundaries[k]; below the first boundary is bucket 0, above the last is 12.
BUCKET_BOUNDARIES = np.array([-11, -6, -4, -3, -2, -1, 0, 1, 2, 3, 5, 10])
START_BUCKET = 13  # first non-NULL label in the sentence
NULL_BUCKET = 14  # any transition into a NULL label
NUM_BUCKETS = 15
BUCKET_DIM = 128  # width of each learned bucket embedding

# Canonical parameter-tensor order: initialization draws, checkpoint
# serialization, and optimizer state all follow it.
PARAM_TENSOR_FIELDS = ("attn_query", "ln_gain", "ln_bias", "null_vec",
                       "w1", "b1", "prelu", "w2", "b2",
                       "buckets", "proj_w", "proj_b")


@dataclass
class ModelParameters:
    """All learned tensors plus the model configuration they imply."""

    dim: int  # token embedding width
    max_span: int  # maximum span length on both sides
    hidden: int  # similarity network hidden width
    cost_scale: float  # weight of the training-time alignment cost
    seed: int  # initialization seed

    attn_query: np.ndarray  # (dim,) span attention query
    ln_gain: np.ndarray  # (3*dim,) layer-norm gain
    ln_bias: np.ndarray  # (3*dim,) layer-norm bias
    null_vec: np.ndarray  # (3*dim,) learned NULL label representation
    w1: np.ndarray  # (hidden, 12*dim) similarity input weights
    b1: np.ndarray  # (hidden,) similarity input bias
    prelu: np.ndarray  # (hidden,) per-channel negative-side slopes
    w2: np.ndarray  # (hidden,) similarity output weights
    b2: np.ndarray  # () similarity output bias
    buckets: np.ndarray  # (15, 128) transition bucket embeddings
    proj_w: np.ndarray  # (128,) bucket projection weights
    proj_b: np.ndarray  # () bucket projection bias

    def tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        for name in PARAM_TENSOR_FIELDS:
            yield name, getattr(self, name)

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        return {
            "attn_query": (self.dim,),
            "ln_gain": (3 * self.dim,),
            "ln_bias": (3 * self.dim,),
            "null_vec": (3 * self.dim,),
            "w1": (self.hidden, 12 * self.dim),
            "b1": (self.hidden,),
            "prelu": (self.hidden,),
            "w2": (self.hidden,),
            "b2": (),
            "buckets": (NUM_BUCKETS, BUCKET_DIM),
            "proj_w": (BUCKET_DIM,),
            "proj_b": (),
        }


def float32_values(array: np.ndarray) -> np.ndarray:
    """Round to the nearest float32 value, kept in a float64 carrier."""
    return array.astype(np.float32).astype(np.float64)


def init_parameters(dim: int, max_span: int = 3, hidden: int = 512,
                    cost_scale: float = 1.0, seed: int = 0) -> ModelParameters:
    """Initialize parameters: uniform(-0.05, 0.05) weights, zero biases,
    PReLU slopes 0.25, layer-norm gain 1 / bias 0, from a fixed seed."""
    if dim < 1 or max_span < 1 or hidden < 1:
        raise ValidationError("dim, max_span, and hidden must be positive")
    rng = np.random.default_rng(seed)

    def uniform(*shape: int) -> np.ndarray:
        return float32_values(rng.uniform(-0.05, 0.05, size=shape))

    return ModelParameters(
        dim=dim, max_span=max_span, hidden=hidden,
        cost_scale=float(cost_scale), seed=int(seed),
        attn_query=uniform(dim),
        ln_gain=np.ones(3 * dim),
        ln_bias=np.zeros(3 * dim),
        null_vec=uniform(3 * dim),
        w1=uniform(hidden, 12 * dim),
        b1=np.zeros(hidden),
        prelu=np.full(hidden, np.float64(np.float32(0.25))),
        w2=uniform(hidden),
        b2=np.zeros(()),
        buckets=uniform(NUM_BUCKETS, BUCKET_DIM),
        proj_w=uniform(BUCKET_DIM),
        proj_b=np.zeros(()),
    )


def zero_gradients(params: ModelParameters) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(tensor) for name, tensor in params.tensors()}


def bucketize(distance: int | np.ndarray) -> int | np.ndarray:
    """Map a signed begin-minus-previous-end distance to its bucket index."""
    index = np.searchsorted(BUCKET_BOUNDARIES, distance, side="left")
    if np.isscalar(distance) or np.ndim(distance) == 0:
        return int(index)
    return index


def transition_bucket(prev_end: int | None, label: SpanLabel) -> int:
    """Bucket for a transition: ``prev_end`` is the previous non-NULL
    label's end index, or None when no non-NULL label has occurred yet."""
    if label is None:
        return NULL_BUCKET
    if prev_end is None:
        return START_BUCKET
    return bucketize(label.begin - prev_end)


# ---------------------------------------------------------------------------
# Span representations


@dataclass
class _RepCache:
    """Per-span intermediates needed by the representation backward pass."""

    window: np.ndarray  # (k, dim) token embeddings under the span
    attn: np.ndarray  # (k,) attention weights
    xhat: np.ndarray  # (3*dim,) normalized pre-gain activations
    inv_std: float  # 1 / sqrt(var + eps)


def span_representation(x: np.ndarray, span: Span, params: ModelParameters
                        ) -> tuple[np.ndarray, _RepCache]:
    """Attention-pooled, endpoint-augmented, layer-normalized span vector."""
    query = params.attn_query
    window = x[span.begin:span.end + 1]
    logits = window @ query
    logits = logits - logits.max()
    attn = np.exp(logits)
    attn /= attn.sum()
    raw = np.concatenate([attn @ window, x[span.begin], x[span.end]])

    mean = raw.mean()
    centered = raw - mean
    inv_std = 1.0 / np.sqrt((centered * centered).mean() + LN_EPS)
    xhat = centered * inv_std
    rep = params.ln_gain * xhat + params.ln_bias
    return rep, _RepCache(window, attn, xhat, float(inv_std))


def span_representations(x: np.ndarray, spans: list[Span],
                         params: ModelParameters
                         ) -> tuple[np.ndarray, list[_RepCache]]:
    reps = np.empty((len(spans), 3 * params.dim))
    caches = []
    for row, span in enumerate(spans):
        reps[row], cache = span_representation(x, span, params)
        caches.append(cache)
    return reps, caches


def _rep_backward(d_rep: np.ndarray, cache: _RepCache,
                  params: ModelParameters,
                  grads: dict[str, np.ndarray]) -> None:
    """Accumulate parameter gradients for one span representation."""
    grads["ln_gain"] += d_rep * cache.xhat
    grads["ln_bias"] += d_rep
    d_xhat = d_rep * params.ln_gain
    # Layer-norm backward over all 3*dim features jointly.
    d_raw = cache.inv_std * (
        d_xhat - d_xhat.mean() - cache.xhat * (d_xhat * cache.xhat).mean())

    dim = params.dim
    d_pooled = d_raw[:dim]
    # Endpoint slices feed token embeddings, which are inputs, not
    # parameters; only the attention weights route back into the query.
    d_attn = cache.window @ d_pooled
    d_logits = cache.attn * (d_attn - cache.attn @ d_attn)
    grads["attn_query"] += cache.window.T @ d_logits


# ---------------------------------------------------------------------------
# Similarity network

# Cap on elements per chunk when materializing (rows, labels, 3*dim)
# feature blocks; keeps memory flat for long sentences and wide embeddings.
_CHUNK_ELEMENTS = 2_000_000


def _chunk_rows(n_labels: int, width: int) -> int:
    return max(1, _CHUNK_ELEMENTS // max(1, n_labels * width))


def interaction_matrix(h_src: np.ndarray, h_tgt: np.ndarray,
                       params: ModelParameters) -> np.ndarray:
    """Similarity scores for every (source rep, target rep) pair.

    ``h_src`` is (ns, 3*dim) and ``h_tgt`` is (nl, 3*dim); the result is
    (ns, nl). Features per pair: the two representations, their absolute
    difference, and their elementwise product.
    """
    ns, nl = h_src.shape[0], h_tgt.shape[0]
    width = h_src.shape[1]
    w_a, w_b, w_c, w_d = (params.w1[:, k * width:(k + 1) * width]
                          for k in range(4))
    base = h_src @ w_a.T  # (ns, hidden)
    tgt_part = h_tgt @ w_b.T  # (nl, hidden)
    scores = np.empty((ns, nl))
    step = _chunk_rows(nl, width)
    for lo in range(0, ns, step):
        hi = min(lo + step, ns)
        block = h_src[lo:hi, None, :]  # (rows, 1, width)
        diff = np.abs(block - h_tgt[None, :, :])
        prod = block * h_tgt[None, :, :]
        pre = (base[lo:hi, None, :] + tgt_part[None, :, :]
               + diff @ w_c.T + prod @ w_d.T + params.b1)
        act = np.where(pre >= 0.0, pre, params.prelu * pre)
        scores[lo:hi] = act @ params.w2 + params.b2
    return scores


def _interaction_backward(h_src: np.ndarray, h_tgt: np.ndarray,
                          d_scores: np.ndarray, params: ModelParameters,
                          grads: dict[str, np.ndarray]
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Backward through the similarity network.

    Recomputes features chunk by chunk (they are cheaper to rebuild than to
    cache). Returns gradients w.r.t. ``h_src`` and ``h_tgt`` and accumulates
    parameter gradients in place.
    """
    ns = h_src.shape[0]
    width = h_src.shape[1]
    w_a, w_b, w_c, w_d = (params.w1[:, k * width:(k + 1) * width]
                          for k in range(4))
    base = h_src @ w_a.T
    tgt_part = h_tgt @ w_b.T
    d_src = np.zeros_like(h_src)
    d_tgt = np.zeros_like(h_tgt)
    step = _chunk_rows(h_tgt.shape[0], width)
    for lo in range(0, ns, step):
        hi = min(lo + step, ns)
        block = h_src[lo:hi, None, :]
        delta = block - h_tgt[None, :, :]
        sign = np.sign(delta)
        prod = block * h_tgt[None, :, :]
        pre = (base[lo:hi, None, :] + tgt_part[None, :, :]
               + np.abs(delta) @ w_c.T + prod @ w_d.T + params.b1)
        act = np.where(pre >= 0.0, pre, params.prelu * pre)

        d_chunk = d_scores[lo:hi]  # (rows, nl)
        grads["w2"] += np.einsum("rl,rlh->h", d_chunk, act)
        grads["b2"] += d_chunk.sum()
        d_act = d_chunk[:, :, None] * params.w2  # (rows, nl, hidden)
        negative = pre < 0.0
        grads["prelu"] += np.einsum("rlh,rlh->h", d_act,
                                    np.where(negative, pre, 0.0))
        d_pre = d_act * np.where(negative, params.prelu, 1.0)
        grads["b1"] += d_pre.sum(axis=(0, 1))

        abs_delta = np.abs(delta)
        grads["w1"][:, 0 * width:1 * width] += np.einsum(
            "rlh,rw->hw", d_pre, h_src[lo:hi])
        grads["w1"][:, 1 * width:2 * width] += np.einsum(
            "rlh,lw->hw", d_pre, h_tgt)
        grads["w1"][:, 2 * width:3 * width] += np.einsum(
            "rlh,rlw->hw", d_pre, abs_delta)
        grads["w1"][:, 3 * width:4 * width] += np.einsum(
            "rlh,rlw->hw", d_pre, prod)

        d_abs = d_pre @ w_c  # (rows, nl, width)
        d_prod = d_pre @ w_d
        d_src[lo:hi] += (d_pre.sum(axis=1) @ w_a
                         + (d_abs * sign).sum(axis=1)
                         + np.einsum("rlw,lw->rw", d_prod, h_tgt))
        d_tgt += (d_pre.sum(axis=0) @ w_b
                  - np.einsum("rlw,rlw->lw", d_abs, sign)
                  + np.einsum("rlw,rw->lw", d_prod, h_src[lo:hi]))
    return d_src, d_tgt


def interaction_score(h_src: np.ndarray, h_tgt: np.ndarray,
                      params: ModelParameters) -> float:
    """Similarity score for a single representation pair."""
    return float(interaction_matrix(h_src[None, :], h_tgt[None, :],
                                    params)[0, 0])


# ---------------------------------------------------------------------------
# Transitions


def transition_table(params: ModelParameters) -> np.ndarray:
    """Scalar transition score per bucket: a linear projection of each
    bucket embedding. Shape (15,)."""
    return params.buckets @ params.proj_w + params.proj_b


def transition_score(params: ModelParameters, prev_end: int | None,
                     label: SpanLabel) -> float:
    return float(transition_table(params)[transition_bucket(prev_end, label)])


# ---------------------------------------------------------------------------
# Score tables: everything the lattice needs for one sentence pair


@dataclass
class ScoreTables:
    """Similarity and transition scores for one directed sentence pair.

    ``upsilon[s, l]`` scores source span ``spans[s]`` against label
    ``labels[l]``; label 0 is NULL. ``tau[k]`` scores transition bucket
    ``k``. Caches retain what the backward pass needs.
    """

    spans: list[Span]
    labels: list[SpanLabel]
    upsilon: np.ndarray  # (len(spans), len(labels)) float64
    tau: np.ndarray  # (15,) float64
    # Backward-pass state; absent when tables carry externally set scores.
    src_reps: np.ndarray | None = None
    tgt_reps: np.ndarray | None = None  # row 0 is the raw NULL vector
    src_caches: list[_RepCache] | None = None
    tgt_caches: list[_RepCache] | None = None  # for labels[1:]


def label_list(tgt_len: int, max_span: int) -> list[SpanLabel]:
    """NULL followed by every target span of up to ``max_span`` words."""
    return [None, *enumerate_spans(tgt_len, max_span)]


def score_tables(x_src: np.ndarray, x_tgt: np.ndarray,
                 params: ModelParameters) -> ScoreTables:
    """Build the full score tables for one directed sentence pair."""
    spans = enumerate_spans(x_src.shape[0], params.max_span)
    labels = label_list(x_tgt.shape[0], params.max_span)
    src_reps, src_caches = span_representations(x_src, spans, params)
    tgt_spans = [label for label in labels[1:]]
    tgt_span_reps, tgt_caches = span_representations(x_tgt, tgt_spans, params)
    tgt_reps = np.vstack([params.null_vec[None, :], tgt_span_reps])
    upsilon = interaction_matrix(src_reps, tgt_reps, params)
    return ScoreTables(spans=spans, labels=labels, upsilon=upsilon,
                       tau=transition_table(params),
                       src_reps=src_reps, tgt_reps=tgt_reps,
                       src_caches=src_caches, tgt_caches=tgt_caches)


def tables_backward(tables: ScoreTables, d_upsilon: np.ndarray,
                    d_tau: np.ndarray, params: ModelParameters,
                    grads: dict[str, np.ndarray] | None = None
                    ) -> dict[str, np.ndarray]:
    """Backpropagate table-level gradients into parameter gradients.

    ``d_upsilon`` matches ``tables.upsilon`` and ``d_tau`` matches
    ``tables.tau``. Accumulates into ``grads`` when given.
    """
    if grads is None:
        grads = zero_gradients(params)
    grads["buckets"] += np.outer(d_tau, params.proj_w)
    grads["proj_w"] += params.buckets.T @ d_tau
    grads["proj_b"] += d_tau.sum()

    d_src, d_tgt = _interaction_backward(tables.src_reps, tables.tgt_reps,
                                         d_upsilon, params, grads)
    grads["null_vec"] += d_tgt[0]
    for row, cache in enumerate(tables.src_caches):
        _rep_backward(d_src[row], cache, params, grads)
    for row, cache in enumerate(tables.tgt_caches):
        _rep_backward(d_tgt[row + 1], cache, params, grads)
    return grads
