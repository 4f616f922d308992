"""Bidirectional mini-batch training with Adam and per-epoch dev evaluation.

Each sentence pair contributes the sum of its two directional losses (the
parameters are shared across directions). Batches accumulate per-pair
gradients, average them, and take one Adam step with decoupled weight decay.
Data order reshuffles every epoch from a seeded generator keyed on (seed,
epoch), so an interrupted run resumed from a checkpoint replays the exact
remaining schedule.

Determinism: parameter and optimizer-moment values are rounded through
float32 after every step (in float64 carriers), so checkpoints — float32 on
disk — restore training state exactly, and resumed training is bit-identical
to an uninterrupted run. The wall-clock source is injectable for
byte-reproducible logs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (Direction, SentencePair, Setting, SpanAlignmentSequence,
                   derive_gold_spans)
from .embeddings import EmbeddingStore
from .errors import NumericError, ValidationError
from .evaluate import corpus_eval
from .lattice import loss_and_gradients
from .parallel import map_ordered
from .pipeline import decode_pair
from .scorer import (ModelParameters, PARAM_TENSOR_FIELDS, float32_values,
                     init_parameters, score_tables, tables_backward,
                     zero_gradients)
from .symmetrize import MERGE_STRATEGIES

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    """Training hyperparameters (model size hyperparameters included)."""

    learning_rate: float = 1e-5
    weight_decay: float = 1e-5
    epochs: int = 5
    max_span: int = 3
    batch_size: int = 8
    seed: int = 0
    setting: Setting = Setting.SURE_PLUS_POSS
    cost_scale: float = 1.0
    merge: str = "intersection"  # merge strategy for the dev decode
    hidden: int = 512

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValidationError("learning_rate must be positive and "
                                  "weight_decay non-negative")
        if self.epochs < 1 or self.batch_size < 1 or self.max_span < 1 \
                or self.hidden < 1:
            raise ValidationError("epochs, batch_size, max_span, and hidden "
                                  "must be at least 1")
        if self.cost_scale < 0:
            raise ValidationError("cost_scale must be non-negative")
        if self.merge not in MERGE_STRATEGIES:
            raise ValidationError(f"unknown merge strategy {self.merge!r}")


@dataclass
class AdamState:
    """First/second moments per parameter tensor plus the step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def fresh(cls, params: ModelParameters) -> "AdamState":
        return cls(m=zero_gradients(params), v=zero_gradients(params))

    def to_extras(self) -> dict[str, np.ndarray]:
        extras = {"adam.step": np.array(float(self.step))}
        for name in PARAM_TENSOR_FIELDS:
            extras[f"adam.m.{name}"] = self.m[name]
            extras[f"adam.v.{name}"] = self.v[name]
        return extras

    @classmethod
    def from_extras(cls, extras: dict[str, np.ndarray]) -> "AdamState | None":
        if "adam.step" not in extras:
            return None
        return cls(m={name: extras[f"adam.m.{name}"]
                      for name in PARAM_TENSOR_FIELDS},
                   v={name: extras[f"adam.v.{name}"]
                      for name in PARAM_TENSOR_FIELDS},
                   step=int(extras["adam.step"]))


def adam_step(params: ModelParameters, state: AdamState,
              grads: dict[str, np.ndarray], learning_rate: float,
              weight_decay: float) -> None:
    """One Adam update with decoupled weight decay, in place.

    Weight decay multiplies every tensor by (1 - lr * wd) directly; the
    gradient-based update uses bias-corrected moments. Updated tensors and
    moments are rounded to float32-representable values.
    """
    state.step += 1
    correction1 = 1.0 - ADAM_BETA1 ** state.step
    correction2 = 1.0 - ADAM_BETA2 ** state.step
    for name, theta in params.tensors():
        grad = grads[name]
        m = state.m[name]
        v = state.v[name]
        m_new = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
        v_new = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad
        update = (learning_rate * (m_new / correction1)
                  / (np.sqrt(v_new / correction2) + ADAM_EPS))
        theta[...] = float32_values(
            theta * (1.0 - learning_rate * weight_decay) - update)
        m[...] = float32_values(m_new)
        v[...] = float32_values(v_new)


@dataclass
class TrainResult:
    last_checkpoint: Path
    best_checkpoint: Path
    log_path: Path
    best_f1: float
    epochs_run: int


GoldSequences = dict[str, dict[Direction, SpanAlignmentSequence]]


def derive_gold_cache(corpus: list[SentencePair], setting: Setting,
                      max_span: int) -> GoldSequences:
    cache: GoldSequences = {}
    for pair in corpus:
        cache[pair.pair_id] = {
            direction: derive_gold_spans(pair, direction, setting,
                                         max_span).sequence
            for direction in Direction}
    return cache


def pair_loss_and_gradients(pair: SentencePair, store: EmbeddingStore,
                            params: ModelParameters,
                            golds: dict[Direction, SpanAlignmentSequence]
                            ) -> tuple[float, dict[str, np.ndarray]]:
    """Sum of both directional losses and their parameter gradients."""
    x_src, x_tgt = store.vectors_for(pair)
    grads = zero_gradients(params)
    total = 0.0
    for direction in Direction:
        xs, xt = ((x_src, x_tgt) if direction is Direction.S2T
                  else (x_tgt, x_src))
        tables = score_tables(xs, xt, params)
        try:
            loss, d_upsilon, d_tau = loss_and_gradients(
                tables, golds[direction], params.cost_scale)
        except NumericError as exc:
            raise NumericError(
                f"pair {pair.pair_id!r} ({direction.value}): {exc}") from exc
        tables_backward(tables, d_upsilon, d_tau, params, grads)
        total += loss
    return total, grads


def evaluate_dev(dev_corpus: list[SentencePair], store: EmbeddingStore,
                 params: ModelParameters, setting: Setting, merge: str,
                 workers: int = 1) -> dict:
    preds = map_ordered(
        lambda pair: decode_pair(pair, store, params, merge=merge),
        dev_corpus, workers)
    return corpus_eval(zip(dev_corpus, preds), setting)


def train(corpus: list[SentencePair], dev_corpus: list[SentencePair],
          store: EmbeddingStore, config: TrainConfig, out_dir: str | Path,
          workers: int = 1, resume: str | Path | None = None,
          clock: Callable[[], float] = time.perf_counter) -> TrainResult:
    """Run the full training loop; returns checkpoint and log locations.

    Writes ``epoch-NNNN.mwamdl`` after every epoch, ``best.mwamdl``
    whenever dev F1 improves, and one JSON log line per epoch to
    ``train_log.jsonl``. ``resume`` restarts from an epoch checkpoint,
    reproducing the uninterrupted run bit for bit.
    """
    if not corpus:
        raise ValidationError("training corpus is empty")
    if not dev_corpus:
        raise ValidationError("dev corpus is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    best_path = out_dir / "best.mwamdl"

    if resume is not None:
        params, extras = load_checkpoint(resume)
        optimizer = AdamState.from_extras(extras)
        if optimizer is None or "epoch" not in extras:
            raise ValidationError(f"{resume}: checkpoint lacks training "
                                  f"state; cannot resume")
        start_epoch = int(extras["epoch"]) + 1
        best_f1 = float(extras["best_f1"])
    else:
        params = init_parameters(dim=store.dim, max_span=config.max_span,
                                 hidden=config.hidden,
                                 cost_scale=config.cost_scale,
                                 seed=config.seed)
        optimizer = AdamState.fresh(params)
        start_epoch = 1
        best_f1 = -1.0
        log_path.write_text("")

    golds = derive_gold_cache(corpus, config.setting, config.max_span)
    last_path = best_path
    epoch = start_epoch - 1
    for epoch in range(start_epoch, config.epochs + 1):
        started = clock()
        order = np.random.default_rng(
            [config.seed, epoch]).permutation(len(corpus))
        epoch_loss = 0.0
        for lo in range(0, len(order), config.batch_size):
            batch = [corpus[idx] for idx in order[lo:lo + config.batch_size]]
            results = map_ordered(
                lambda pair: pair_loss_and_gradients(
                    pair, store, params, golds[pair.pair_id]),
                batch, workers)
            summed = zero_gradients(params)
            for loss, grads in results:
                epoch_loss += loss
                for name in summed:
                    summed[name] += grads[name]
            scale = 1.0 / len(batch)
            for name in summed:
                summed[name] *= scale
            adam_step(params, optimizer, summed, config.learning_rate,
                      config.weight_decay)

        report = evaluate_dev(dev_corpus, store, params, config.setting,
                              config.merge, workers)
        record = {
            "epoch": epoch,
            "mean_loss": epoch_loss / len(corpus),
            "dev_precision": report["precision"],
            "dev_recall": report["recall"],
            "dev_f1": report["f1"],
            "dev_em": report["em"],
            "seconds": clock() - started,
        }
        with open(log_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record) + "\n")

        if report["f1"] > best_f1:
            # Rounded like every checkpointed value, so resuming compares
            # later epochs against exactly the number this run compared.
            best_f1 = float(np.float32(report["f1"]))
            save_checkpoint(params, best_path, extras=optimizer.to_extras())
        last_path = out_dir / f"epoch-{epoch:04d}.mwamdl"
        extras = optimizer.to_extras()
        extras["epoch"] = np.array(float(epoch))
        extras["best_f1"] = np.array(best_f1)
        save_checkpoint(params, last_path, extras=extras)

    return TrainResult(last_checkpoint=last_path, best_checkpoint=best_path,
                       log_path=log_path, best_f1=best_f1, epochs_run=epoch)
