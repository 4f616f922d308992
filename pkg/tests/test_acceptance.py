"""Acceptance gate: the binding correctness criteria, one test each.

Every test prints a single summary line (visible with ``pytest -s`` or in
captured output) naming the criterion, the scale it ran at, and its runtime;
the pytest verdict for the test is the pass/fail line for the criterion.
Tolerances and instance counts here are the binding ones — the per-module
suites cover the same ground at development scale.
"""

import time

import numpy as np
import pytest

from helpers import (assert_matches_oracle, copy_corpus_vocab,
                      memorization_corpus, random_gold_pairs, random_pair,
                      random_parameters, random_sequence, random_tables,
                      static_store)
from spanalign.checkpoint import load_checkpoint
from spanalign.data import SentencePair, Setting
from spanalign.edits import (ADD, KEEP, REPLACE_E, REPLACE_S, apply_program,
                             derive_program)
from spanalign.evaluate import (corpus_eval, corpus_stats, exact_match,
                                is_identical, prf, shape_stats)
from spanalign.lattice import (build_lattice, hamming_cost_table,
                               log_partition, loss_and_gradients,
                               sequence_score)
from spanalign.pipeline import align_corpus
from spanalign.scorer import (ScoreTables, interaction_matrix, score_tables,
                              tables_backward, transition_table,
                              zero_gradients)
from spanalign.symmetrize import bidi_average, grow_diag, intersection, union
from spanalign.trainer import TrainConfig, train


def report(name, detail, started):
    print(f"acceptance {name}: PASS ({detail}, {time.perf_counter() - started:.1f}s)")


def test_lattice_oracle_equivalence():
    # >= 1,000 random instances, n,m <= 4, spans up to 2, everything the
    # lattice computes vs. exhaustive enumeration, within 1e-9; < 1 minute.
    started = time.perf_counter()
    rng = np.random.default_rng(20240815)
    instances = 1000
    for trial in range(instances):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        max_span = int(rng.integers(1, 3))
        tables = random_tables(rng, n, m, max_span)
        cost = None
        if trial % 4 == 0:
            cost = rng.uniform(0.0, 2.0,
                               size=(len(tables.spans), len(tables.labels)))
        assert_matches_oracle(tables, n, m, max_span, cost=cost, tol=1e-9)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report("lattice-oracle-equivalence", f"{instances} instances", started)


def bidirectional_loss(x_src, x_tgt, gold_fwd, gold_bwd, params):
    """Loss only, for finite differencing."""
    total = 0.0
    for xs, xt, gold in ((x_src, x_tgt, gold_fwd), (x_tgt, x_src, gold_bwd)):
        tables = score_tables(xs, xt, params)
        cost = hamming_cost_table(tables, gold, params.cost_scale)
        lat = build_lattice(tables, cost=cost)
        total += log_partition(lat) - sequence_score(tables, gold)
    return total


def kink_margin(params, x_src, x_tgt):
    """Distance from the nearest activation or absolute-value kink.

    Central differences measure a blend of one-sided slopes whenever the
    probe bracket straddles a kink, so they only certify the analytic
    gradient at points a safe margin away from every PReLU zero crossing
    and every absolute-difference zero. Exactly-zero differences are kept:
    they come from spans whose representations coincide identically (and
    move together under any parameter perturbation), so the feature is
    locally constant there and both sides agree.
    """
    width = 3 * params.dim
    w_a, w_b, w_c, w_d = (params.w1[:, k * width:(k + 1) * width]
                          for k in range(4))
    margin = np.inf
    for xs, xt in ((x_src, x_tgt), (x_tgt, x_src)):
        tables = score_tables(xs, xt, params)
        h_s, h_t = tables.src_reps, tables.tgt_reps
        delta = h_s[:, None, :] - h_t[None, :, :]
        moving = delta[delta != 0.0]
        if moving.size:
            margin = min(margin, float(np.abs(moving).min()))
        pre = ((h_s @ w_a.T)[:, None, :] + (h_t @ w_b.T)[None, :, :]
               + np.abs(delta) @ w_c.T
               + (h_s[:, None, :] * h_t[None, :, :]) @ w_d.T + params.b1)
        margin = min(margin, float(np.abs(pre).min()))
    return margin


def test_gradient_correctness():
    # >= 100 random instances (dim <= 4, hidden <= 4): analytic gradients of
    # the bidirectional cost-augmented loss vs. central finite differences,
    # every component of every parameter tensor; relative 1e-4; < 5 minutes.
    started = time.perf_counter()
    rng = np.random.default_rng(20240816)
    instances = 100
    h = 1e-5
    redrawn = 0

    def check(name, analytic, numeric):
        scale = max(1.0, abs(analytic), abs(numeric))
        assert abs(analytic - numeric) <= 1e-4 * scale, \
            f"{name}: analytic {analytic} vs fd {numeric}"

    for trial in range(instances):
        while True:
            dim = int(rng.integers(1, 5))
            hidden = int(rng.integers(1, 5))
            max_span = int(rng.integers(1, 3))
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 4))
            cost_scale = float(rng.choice([0.0, 0.5, 1.0]))
            # Generic parameter points: a fresh init's exact zeros can land
            # degenerate width-1 instances right on the activation kink.
            params = random_parameters(rng, dim=dim, hidden=hidden,
                                       max_span=max_span,
                                       cost_scale=cost_scale)
            x_src = np.asarray(np.float32(rng.normal(size=(n, dim))),
                               dtype=np.float64)
            x_tgt = np.asarray(np.float32(rng.normal(size=(m, dim))),
                               dtype=np.float64)
            if kink_margin(params, x_src, x_tgt) > 1e-3:
                break
            redrawn += 1
        gold_fwd = random_sequence(rng, n, m, max_span)
        gold_bwd = random_sequence(rng, m, n, max_span)

        # Analytic gradients, accumulated over both directions.
        grads = zero_gradients(params)
        for xs, xt, gold in ((x_src, x_tgt, gold_fwd),
                             (x_tgt, x_src, gold_bwd)):
            tables = score_tables(xs, xt, params)
            _, d_upsilon, d_tau = loss_and_gradients(tables, gold, cost_scale)
            tables_backward(tables, d_upsilon, d_tau, params, grads)

        # Finite differences. Cached intermediates keep the probe loss
        # consistent with what each parameter group can influence: the
        # transition projection only reshapes tau, the interaction network
        # only reshapes upsilon over fixed span representations, and the
        # representation parameters force a full rebuild.
        base_tables = [score_tables(x_src, x_tgt, params),
                       score_tables(x_tgt, x_src, params)]
        golds = (gold_fwd, gold_bwd)

        def loss_from_tables(tables_pair):
            total = 0.0
            for tables, gold in zip(tables_pair, golds):
                cost = hamming_cost_table(tables, gold, cost_scale)
                lat = build_lattice(tables, cost=cost)
                total += log_partition(lat) - sequence_score(tables, gold)
            return total

        def tau_probe():
            tau = transition_table(params)
            probes = [ScoreTables(spans=tables.spans, labels=tables.labels,
                                  upsilon=tables.upsilon, tau=tau)
                      for tables in base_tables]
            return loss_from_tables(probes)

        def ff_probe():
            probes = [ScoreTables(
                spans=tables.spans, labels=tables.labels,
                upsilon=interaction_matrix(tables.src_reps, tables.tgt_reps,
                                           params),
                tau=tables.tau) for tables in base_tables]
            return loss_from_tables(probes)

        def full_probe():
            return bidirectional_loss(x_src, x_tgt, gold_fwd, gold_bwd,
                                      params)

        groups = {
            "buckets": tau_probe, "proj_w": tau_probe, "proj_b": tau_probe,
            "w1": ff_probe, "b1": ff_probe, "prelu": ff_probe,
            "w2": ff_probe, "b2": ff_probe,
            "attn_query": full_probe, "ln_gain": full_probe,
            "ln_bias": full_probe, "null_vec": full_probe,
        }
        for name, tensor in params.tensors():
            probe = groups[name]
            flat = tensor.reshape(-1)
            grad_flat = grads[name].reshape(-1)
            for idx in range(flat.size):
                kept = flat[idx]
                flat[idx] = kept + h
                plus = probe()
                flat[idx] = kept - h
                minus = probe()
                flat[idx] = kept
                check(f"{name}[{idx}] (trial {trial})", grad_flat[idx],
                      (plus - minus) / (2 * h))

    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    report("gradient-correctness",
           f"{instances} instances, all tensors, {redrawn} redrawn near kinks",
           started)


def test_overfit_closure(tmp_path):
    # 20 synthetic pairs, random static embeddings, lr 1e-3, spans up to 3:
    # training-set F1 >= 0.99 and EM >= 0.95 within 200 epochs; < 10 minutes.
    started = time.perf_counter()
    rng = np.random.default_rng(20240817)
    corpus = memorization_corpus(rng, 20)
    vocab = sorted({w for pair in corpus
                    for w in pair.src_tokens + pair.tgt_tokens})
    store = static_store(rng, vocab, dim=16)
    config = TrainConfig(learning_rate=1e-3, weight_decay=0.0, epochs=200,
                         max_span=3, batch_size=8, seed=0,
                         setting=Setting.SURE, cost_scale=1.0,
                         merge="intersection", hidden=64)
    result = train(corpus, corpus, store, config, tmp_path / "overfit")
    params, _ = load_checkpoint(result.best_checkpoint)
    decoded = align_corpus(corpus, store, params, merge="intersection")
    scores = corpus_eval(decoded, Setting.SURE)
    elapsed = time.perf_counter() - started
    assert scores["f1"] >= 0.99, scores
    assert scores["em"] >= 95.0, scores
    assert elapsed < 600.0
    report("overfit-closure",
           f"F1 {scores['f1']:.4f}, EM {scores['em']:.1f}%", started)


def test_symmetrization_algebra():
    # intersection <= grow-diag <= union on >= 10,000 random alignment set
    # pairs; bidi-avg monotone in threshold; pinned grow-diag example.
    started = time.perf_counter()
    rng = np.random.default_rng(20240818)
    instances = 10000
    for trial in range(instances):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        fwd = random_gold_pairs(rng, n, m, density=0.25)
        bwd = random_gold_pairs(rng, n, m, density=0.25)
        grown = grow_diag(fwd, bwd)
        assert intersection(fwd, bwd) <= grown <= union(fwd, bwd)

    for trial in range(200):
        fwd = rng.uniform(size=(4, 5))
        bwd = rng.uniform(size=(4, 5))
        previous = None
        for threshold in (0.0, 0.25, 0.5, 0.75, 1.0):
            current = bidi_average(fwd, bwd, threshold)
            if previous is not None:
                assert current <= previous
            previous = current

    fwd = frozenset({(0, 0), (1, 1)})
    bwd = frozenset({(0, 0), (1, 2)})
    assert grow_diag(fwd, bwd) == {(0, 0), (1, 1), (1, 2)}
    report("symmetrization-algebra", f"{instances} set pairs", started)


def test_metric_fidelity():
    # The pinned metric examples, asserted exactly.
    started = time.perf_counter()
    assert prf(frozenset({(0, 0)}), frozenset({(0, 0)})) == (1.0, 1.0, 1.0)
    precision, recall, f1 = prf(frozenset({(0, 0)}),
                                frozenset({(0, 0), (1, 1)}))
    assert (precision, recall) == (1.0, 0.5) and f1 == pytest.approx(2 / 3)
    assert prf(frozenset(), frozenset()) == (1.0, 1.0, 1.0)

    assert exact_match(frozenset({(0, 0)}), frozenset({(0, 0)}))
    assert not exact_match(frozenset(), frozenset({(0, 0)}))
    assert exact_match(frozenset(), frozenset())

    naming = SentencePair(pair_id="t", src_tokens=("Lloyd", "conduct", "The"),
                          tgt_tokens=("Lloyd", "performed", "the"),
                          sure=frozenset(), poss=frozenset())
    assert is_identical(naming, (0, 0))
    assert not is_identical(naming, (1, 1))
    assert is_identical(naming, (2, 2))

    perfect = SentencePair(pair_id="a", src_tokens=("x",),
                           tgt_tokens=("x",), sure=frozenset({(0, 0)}),
                           poss=frozenset())
    empty_pred = SentencePair(pair_id="b", src_tokens=("y",),
                              tgt_tokens=("y",), sure=frozenset({(0, 0)}),
                              poss=frozenset())
    single = corpus_eval([(perfect, frozenset({(0, 0)}))], Setting.SURE)
    assert single["f1"] == 1.0 and single["em"] == 100.0
    halved = corpus_eval([(perfect, frozenset({(0, 0)})),
                          (empty_pred, frozenset())], Setting.SURE)
    assert halved["em"] == 50.0

    aligned = SentencePair(pair_id="c", src_tokens=("a", "b"),
                           tgt_tokens=("a", "b"),
                           sure=frozenset({(0, 0), (1, 1)}),
                           poss=frozenset())
    stats = corpus_stats([aligned], Setting.SURE)
    assert stats["aligned_token_pct"] == 100.0
    assert stats["word_pct"] == 100.0 and stats["phrase_pct"] == 0.0
    assert stats["identical_pct"] == 100.0
    unaligned = SentencePair(pair_id="d", src_tokens=("a",),
                             tgt_tokens=("b",), sure=frozenset(),
                             poss=frozenset())
    assert corpus_stats([unaligned],
                        Setting.SURE)["aligned_token_pct"] == 0.0

    one = SentencePair(pair_id="e", src_tokens=("a",), tgt_tokens=("b",),
                       sure=frozenset({(0, 0)}), poss=frozenset())
    assert shape_stats([one], Setting.SURE) == {"1x1": 1}
    block = SentencePair(
        pair_id="f", src_tokens=("a", "b"), tgt_tokens=("x", "y", "z"),
        sure=frozenset({(i, j) for i in range(2) for j in range(3)}),
        poss=frozenset())
    assert shape_stats([block], Setting.SURE) == {"2x3": 6}
    ell = SentencePair(pair_id="g", src_tokens=("a", "b"),
                       tgt_tokens=("x", "y"),
                       sure=frozenset({(0, 0), (0, 1), (1, 0)}),
                       poss=frozenset())
    assert shape_stats([ell], Setting.SURE) == {"irregular": 3}
    report("metric-fidelity", "all pinned examples", started)


def test_edit_program_round_trip():
    # >= 1,000 random triples reconstruct the target exactly; the pinned
    # sentence pair produces the simulations -> experiments REPLACE block.
    started = time.perf_counter()
    rng = np.random.default_rng(20240819)
    instances = 1000
    vocab = ["u", "v", "w", "x", "y"]
    for trial in range(instances):
        n = int(rng.integers(0, 8))
        m = int(rng.integers(0, 8))
        src = [vocab[int(rng.integers(len(vocab)))] for _ in range(n)]
        tgt = [vocab[int(rng.integers(len(vocab)))] for _ in range(m)]
        alignment = frozenset({(i, j) for i in range(n) for j in range(m)
                               if rng.random() < 0.15})
        program = derive_program(src, tgt, alignment)
        assert apply_program(src, program) == tgt

    source = ["With", "Canadian", "collaborators,", "Lloyd", "went", "on",
              "to", "conduct", "laboratory", "simulations", "of", "his",
              "model."]
    target = ["Lloyd", "performed", "successful", "laboratory",
              "experiments", "of", "his", "model."]
    alignment = frozenset({(3, 0), (7, 1), (8, 3), (9, 4), (10, 5), (11, 6),
                           (12, 7)})
    program = derive_program(source, target, alignment)
    assert program.ops[-7:] == (
        (KEEP, None),
        (REPLACE_S, None), (ADD, "experiments"), (REPLACE_E, None),
        (KEEP, None), (KEEP, None), (KEEP, None))
    assert apply_program(source, program) == target
    report("edit-program-round-trip", f"{instances} triples", started)


def test_training_determinism(tmp_path, rng):
    # Two single-worker train runs (2 epochs, fixed seed) produce
    # byte-identical checkpoints and logs. The wall-clock source is injected
    # as a constant so the per-epoch timing field is comparable too.
    started = time.perf_counter()
    corpus = [random_pair(rng, f"p{i}", int(rng.integers(2, 6)),
                          int(rng.integers(2, 6))) for i in range(8)]
    store = static_store(rng, copy_corpus_vocab(corpus), dim=4)
    config = TrainConfig(learning_rate=1e-3, weight_decay=1e-5, epochs=2,
                         max_span=2, batch_size=3, seed=13, hidden=8)
    artifacts = []
    for run in ("first", "second"):
        result = train(corpus, corpus, store, config, tmp_path / run,
                       workers=1, clock=lambda: 0.0)
        artifacts.append({
            "epoch-0001": (tmp_path / run / "epoch-0001.mwamdl").read_bytes(),
            "epoch-0002": result.last_checkpoint.read_bytes(),
            "best": result.best_checkpoint.read_bytes(),
            "log": result.log_path.read_bytes(),
        })
    assert artifacts[0] == artifacts[1]
    report("training-determinism", "2 runs x 2 epochs", started)


@pytest.mark.skip(reason="data-scale check requires the full annotated "
                         "corpus and exported contextual embeddings, which "
                         "are not distributed with this repository")
def test_data_scale_sanity_band():
    pass


@pytest.mark.skip(reason="the exporter ships as its own package (exporter/) "
                         "and its contract is asserted by that package's "
                         "test suite")
def test_exporter_contract_pointer():
    pass
