"""Decode-and-merge pipeline plumbing."""

import numpy as np
import pytest

from helpers import (copy_corpus_vocab, random_pair, random_parameters,
                      static_store)
from spanalign.data import transpose_pairs
from spanalign.errors import ValidationError
from spanalign.pipeline import align_corpus, decode_pair
from spanalign.symmetrize import grow_diag, intersection, union


@pytest.fixture
def setup(rng):
    corpus = [random_pair(rng, f"p{i}", int(rng.integers(2, 6)),
                          int(rng.integers(2, 6))) for i in range(6)]
    store = static_store(rng, copy_corpus_vocab(corpus), dim=4)
    params = random_parameters(rng, dim=4, hidden=6, max_span=2)
    return corpus, store, params


class TestDecodePair:
    def test_unknown_merge_rejected(self, setup):
        corpus, store, params = setup
        with pytest.raises(ValidationError, match="unknown merge strategy"):
            decode_pair(corpus[0], store, params, merge="majority")

    def test_merges_compose_directional_decodes(self, setup):
        corpus, store, params = setup
        for pair in corpus:
            fwd = decode_pair(pair, store, params, merge="none")
            bwd = transpose_pairs(
                decode_pair(pair.flipped(), store, params, merge="none"))
            assert decode_pair(pair, store, params, "intersection") \
                == intersection(fwd, bwd)
            assert decode_pair(pair, store, params, "union") \
                == union(fwd, bwd)
            assert decode_pair(pair, store, params, "grow-diag") \
                == grow_diag(fwd, bwd)

    def test_subset_chain(self, setup):
        corpus, store, params = setup
        for pair in corpus:
            narrow = decode_pair(pair, store, params, "intersection")
            grown = decode_pair(pair, store, params, "grow-diag")
            wide = decode_pair(pair, store, params, "union")
            assert narrow <= grown <= wide

    def test_pairs_stay_in_range(self, setup):
        corpus, store, params = setup
        for pair in corpus:
            for merge in ("intersection", "union", "grow-diag", "bidi-avg",
                          "none"):
                pairs = decode_pair(pair, store, params, merge)
                for i, j in pairs:
                    assert 0 <= i < len(pair.src_tokens)
                    assert 0 <= j < len(pair.tgt_tokens)

    def test_extension_only_adds(self, setup):
        corpus, store, params = setup
        for merge in ("none", "union", "bidi-avg"):
            base = decode_pair(corpus[0], store, params, merge)
            extended = decode_pair(corpus[0], store, params, merge,
                                   extend_threshold=0.0)
            assert base <= extended

    def test_bidi_threshold_monotone(self, setup):
        corpus, store, params = setup
        loose = decode_pair(corpus[0], store, params, "bidi-avg",
                            bidi_threshold=0.1)
        strict = decode_pair(corpus[0], store, params, "bidi-avg",
                             bidi_threshold=0.9)
        assert strict <= loose


class TestAlignCorpus:
    def test_preserves_order_and_pairs(self, setup):
        corpus, store, params = setup
        results = align_corpus(corpus, store, params)
        assert [pair.pair_id for pair, _ in results] \
            == [pair.pair_id for pair in corpus]
        for (pair, pairs), expected in zip(
                results, (decode_pair(p, store, params) for p in corpus)):
            assert pairs == expected

    def test_worker_count_invariant(self, setup):
        corpus, store, params = setup
        serial = align_corpus(corpus, store, params, merge="grow-diag",
                              workers=1)
        threaded = align_corpus(corpus, store, params, merge="grow-diag",
                                workers=4)
        assert [pairs for _, pairs in serial] \
            == [pairs for _, pairs in threaded]
