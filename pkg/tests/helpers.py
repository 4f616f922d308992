"""Shared builders for randomized tests.

Tests that need randomness construct their own seeded generators so each test
is reproducible in isolation; these helpers only centralize the shapes of
things (instances, corpora, embedding stores) that several modules need.
"""

from __future__ import annotations

import numpy as np
import pytest

import oracle
from spanalign.data import (SentencePair, Span, SpanAlignmentSequence,
                            enumerate_spans)
from spanalign.embeddings import EmbeddingStore
from spanalign.lattice import (build_lattice, log_partition, marginals,
                               viterbi, word_pair_posteriors)
from spanalign.scorer import (ModelParameters, ScoreTables, float32_values,
                              init_parameters)


def random_tables(
    rng: np.random.Generator, n: int, m: int, max_span: int
) -> ScoreTables:
    """Score tables with independent normal scores; no model behind them."""
    spans = enumerate_spans(n, max_span)
    labels = [None] + enumerate_spans(m, max_span)
    upsilon = rng.normal(size=(len(spans), len(labels)))
    tau = rng.normal(size=15)
    return ScoreTables(spans=spans, labels=labels, upsilon=upsilon, tau=tau)


def upsilon_lookup(tables: ScoreTables) -> dict:
    """The score matrix as a (span, label) -> float mapping for oracles."""
    return {
        (span, label): float(tables.upsilon[i, j])
        for i, span in enumerate(tables.spans)
        for j, label in enumerate(tables.labels)
    }


def oracle_of(tables: ScoreTables, n: int, m: int, max_span: int,
              cost: np.ndarray | None = None) -> oracle.OracleSummary:
    """Exhaustive-enumeration summary of the same scored instance."""
    cost_lookup = None
    if cost is not None:
        cost_lookup = {
            (span, label): float(cost[i, j])
            for i, span in enumerate(tables.spans)
            for j, label in enumerate(tables.labels)}
    return oracle.summarize(n, m, max_span, upsilon_lookup(tables),
                            tables.tau, cost=cost_lookup)


def assert_matches_oracle(tables: ScoreTables, n: int, m: int, max_span: int,
                          cost: np.ndarray | None = None,
                          tol: float = 1e-9) -> None:
    """Engine vs. enumeration: partition, marginals, posteriors, Viterbi."""
    expected = oracle_of(tables, n, m, max_span, cost=cost)
    lat = build_lattice(tables, cost=cost)

    assert log_partition(lat) == pytest.approx(expected.log_z, abs=tol)

    post, counts, _ = marginals(lat)
    for i, span in enumerate(tables.spans):
        for j, label in enumerate(tables.labels):
            assert post[i, j] == pytest.approx(
                expected.posterior.get((span, label), 0.0), abs=tol), \
                (span, label)
    np.testing.assert_allclose(counts, expected.bucket_counts, atol=tol)
    np.testing.assert_allclose(word_pair_posteriors(lat, post),
                               expected.word_pair, atol=tol)

    sequence, total = viterbi(lat)
    assert sequence.items == expected.best_items
    assert total == pytest.approx(expected.best_score, abs=tol)


def random_parameters(
    rng: np.random.Generator, dim: int, hidden: int, max_span: int, cost_scale: float = 1.0
) -> ModelParameters:
    """Parameters at a generic point.

    Fresh initialization leaves structured exact values (zero biases, unit
    gains) that can park degenerate inputs precisely on the activation and
    absolute-value kinks, where central differences stop being a valid
    oracle. Nudging every tensor moves the draw to a smooth point.
    """
    params = init_parameters(
        dim=dim,
        max_span=max_span,
        hidden=hidden,
        cost_scale=cost_scale,
        seed=int(rng.integers(0, 2**31)),
    )
    for _, tensor in params.tensors():
        tensor += rng.uniform(-0.05, 0.05, size=tensor.shape)
        tensor[...] = float32_values(tensor)
    return params


def random_sequence(
    rng: np.random.Generator, n: int, m: int, max_span: int
) -> SpanAlignmentSequence:
    """A uniformly haphazard (not uniformly distributed) valid sequence."""
    labels = enumerate_spans(m, max_span)
    items = []
    pos = 0
    while pos < n:
        end = int(rng.integers(pos, min(pos + max_span, n)))
        span = Span(pos, end)
        if len(span) == 1 and rng.random() < 0.3:
            items.append((span, None))
        else:
            items.append((span, labels[int(rng.integers(len(labels)))]))
        pos = end + 1
    return SpanAlignmentSequence(tuple(items))


def random_gold_pairs(
    rng: np.random.Generator, n: int, m: int, density: float = 0.3
) -> frozenset[tuple[int, int]]:
    pairs = {
        (i, j)
        for i in range(n)
        for j in range(m)
        if rng.random() < density
    }
    return frozenset(pairs)


def random_pair(
    rng: np.random.Generator,
    pair_id: str,
    n: int,
    m: int,
    vocab: list[str] | None = None,
) -> SentencePair:
    vocab = vocab or [f"w{i}" for i in range(50)]
    src = tuple(vocab[int(rng.integers(len(vocab)))] for _ in range(n))
    tgt = tuple(vocab[int(rng.integers(len(vocab)))] for _ in range(m))
    sure = random_gold_pairs(rng, n, m)
    extra = random_gold_pairs(rng, n, m, density=0.1)
    return SentencePair(
        pair_id=pair_id,
        src_tokens=src,
        tgt_tokens=tgt,
        sure=sure,
        poss=frozenset(extra - sure),
    )


def static_store(
    rng: np.random.Generator, vocab: list[str], dim: int
) -> EmbeddingStore:
    table = {word: rng.normal(size=dim) for word in vocab}
    unk = np.mean(np.stack(list(table.values())), axis=0)
    return EmbeddingStore(dim=dim, static=table, unk=unk)


def copy_corpus_vocab(corpus: list[SentencePair]) -> list[str]:
    words: set[str] = set()
    for pair in corpus:
        words.update(pair.src_tokens)
        words.update(pair.tgt_tokens)
    return sorted(words)


def memorization_corpus(
    rng: np.random.Generator, count: int, vocab_size: int = 80
) -> list[SentencePair]:
    """Pairs whose gold alignment is exactly the identical-word relation.

    The target is a shuffled subset of the source plus a couple of words that
    never occur in the source, so every gold link is one-to-one and the rest
    of the tokens are unaligned.  A model that learns "same word" at the
    embedding level can reach perfect scores on this corpus.
    """
    vocab = [f"tok{i:03d}" for i in range(vocab_size)]
    corpus = []
    for k in range(count):
        size = int(rng.integers(5, 9))
        words = list(rng.choice(vocab, size=size, replace=False))
        kept = [i for i in range(size) if rng.random() > 0.25]
        if not kept:
            kept = [0]
        order = list(rng.permutation(len(kept)))
        tgt = [words[kept[o]] for o in order]
        used = set(words)
        spare = [w for w in vocab if w not in used]
        for _ in range(int(rng.integers(0, 3))):
            pos = int(rng.integers(0, len(tgt) + 1))
            tgt.insert(pos, spare.pop())
        sure = {
            (i, j)
            for i, w in enumerate(words)
            for j, v in enumerate(tgt)
            if w == v
        }
        corpus.append(
            SentencePair(
                pair_id=f"mem-{k:04d}",
                src_tokens=tuple(words),
                tgt_tokens=tuple(tgt),
                sure=frozenset(sure),
                poss=frozenset(),
            )
        )
    return corpus
