"""Decoding pipeline: directional Viterbi decodes, merging, extension."""

from __future__ import annotations

from .data import (SentencePair, WordPairs, to_word_pairs, transpose_pairs)
from .embeddings import EmbeddingStore
from .errors import ValidationError
from .lattice import build_lattice, viterbi, word_pair_posteriors
from .parallel import map_ordered
from .scorer import ModelParameters, score_tables
from .symmetrize import (MERGE_STRATEGIES, bidi_average, extend_phrases,
                         grow_diag, intersection, union)


def decode_pair(pair: SentencePair, store: EmbeddingStore,
                params: ModelParameters, merge: str = "intersection",
                extend_threshold: float | None = None,
                bidi_threshold: float = 0.4) -> WordPairs:
    """Decode one pair in both directions and merge into word pairs.

    When ``extend_threshold`` is set, each direction's decoded spans are
    extended over adjacent high-similarity target words before merging (for
    the posterior-based ``bidi-avg`` merge, extension pairs join the output
    afterwards). ``merge="none"`` returns the forward direction only.
    """
    if merge not in MERGE_STRATEGIES:
        raise ValidationError(f"unknown merge strategy {merge!r}; expected "
                              f"one of {list(MERGE_STRATEGIES)}")
    x_src, x_tgt = store.vectors_for(pair)
    tables_fwd = score_tables(x_src, x_tgt, params)
    lattice_fwd = build_lattice(tables_fwd)
    seq_fwd, _ = viterbi(lattice_fwd)
    fwd = to_word_pairs(seq_fwd)
    if extend_threshold is not None:
        fwd = extend_phrases(seq_fwd, x_src, x_tgt, params, extend_threshold)
    if merge == "none":
        return fwd

    tables_bwd = score_tables(x_tgt, x_src, params)
    lattice_bwd = build_lattice(tables_bwd)
    seq_bwd, _ = viterbi(lattice_bwd)
    bwd = to_word_pairs(seq_bwd)
    if extend_threshold is not None:
        bwd = extend_phrases(seq_bwd, x_tgt, x_src, params, extend_threshold)
    bwd = transpose_pairs(bwd)

    if merge == "intersection":
        return intersection(fwd, bwd)
    if merge == "union":
        return union(fwd, bwd)
    if merge == "grow-diag":
        return grow_diag(fwd, bwd)
    # bidi-avg: threshold the averaged word-pair posterior matrices.
    fwd_post = word_pair_posteriors(lattice_fwd)
    bwd_post = word_pair_posteriors(lattice_bwd).T
    merged = bidi_average(fwd_post, bwd_post, bidi_threshold)
    if extend_threshold is not None:
        merged |= (fwd - to_word_pairs(seq_fwd)) \
            | (bwd - transpose_pairs(to_word_pairs(seq_bwd)))
    return merged


def align_corpus(corpus: list[SentencePair], store: EmbeddingStore,
                 params: ModelParameters, merge: str = "intersection",
                 extend_threshold: float | None = None,
                 bidi_threshold: float = 0.4, workers: int = 1
                 ) -> list[tuple[SentencePair, WordPairs]]:
    """Decode a corpus; deterministic regardless of worker count."""
    results = map_ordered(
        lambda pair: decode_pair(pair, store, params, merge=merge,
                                 extend_threshold=extend_threshold,
                                 bidi_threshold=bidi_threshold),
        corpus, workers)
    return list(zip(corpus, results))
