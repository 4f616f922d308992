"""Concatenated-pair encoding and subword-to-word pooling.

Each sentence pair runs through the encoder in a single pass using the
encoder's native two-sequence scheme (for BERT-family models: a leading
classifier token, the source subwords, a separator, the target subwords, a
trailing separator), so every token is conditioned on both sentences. The
hidden states of one chosen layer are then averaged over each word's
subword positions, yielding one vector per original word.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np
import torch

from .corpus import PairRecord
from .errors import ExportError


def load_encoder(name: str):
    """Tokenizer and model for ``name``, a model id or local directory."""
    from transformers import AutoModel, AutoTokenizer
    from transformers.utils import logging as hf_logging

    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()
    try:
        tokenizer = AutoTokenizer.from_pretrained(name)
        model = AutoModel.from_pretrained(name)
    except Exception as exc:
        raise ExportError(f"cannot load encoder {name!r}: {exc}") from exc
    if not getattr(tokenizer, "is_fast", False):
        raise ExportError(
            f"encoder {name!r} has no fast tokenizer; word-level pooling "
            f"needs its subword-to-word maps")
    model.eval()
    return tokenizer, model


def resolve_layer(spec: str, num_layers: int) -> int:
    """Index into the hidden-state stack: 0 is the embedding output,
    ``num_layers`` (or "last") the final encoder layer."""
    if spec == "last":
        return num_layers
    try:
        index = int(spec)
    except ValueError:
        index = -1
    if not 0 <= index <= num_layers:
        raise ExportError(f"--layer must be 'last' or an integer between 0 "
                          f"and {num_layers}, got {spec!r}")
    return index


def _pooled_sides(hidden: np.ndarray, seq_ids: list, word_ids: list,
                  record: PairRecord) -> tuple[np.ndarray, np.ndarray]:
    """Mean subword vector per word, for the source and target sides."""
    sides = (record.src_tokens, record.tgt_tokens)
    sums = [np.zeros((len(side), hidden.shape[1])) for side in sides]
    counts = [np.zeros(len(side), dtype=np.int64) for side in sides]
    for pos, (seq, word) in enumerate(zip(seq_ids, word_ids)):
        if seq is None or word is None:
            continue
        sums[seq][word] += hidden[pos]
        counts[seq][word] += 1
    for side, name in enumerate(("source", "target")):
        gaps = np.flatnonzero(counts[side] == 0)
        if gaps.size:
            word = int(gaps[0])
            raise ExportError(
                f"pair {record.pair_id!r}: {name} word {word} "
                f"({sides[side][word]!r}) left no subword after "
                f"tokenization, so no embedding can be pooled for it")
    return (sums[0] / counts[0][:, None], sums[1] / counts[1][:, None])


def encode_batch(records: Sequence[PairRecord], tokenizer, model,
                 layer: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Word vectors for a batch of pairs, one encoder pass per pair."""
    encoding = tokenizer([list(r.src_tokens) for r in records],
                         [list(r.tgt_tokens) for r in records],
                         is_split_into_words=True, padding=True,
                         return_tensors="pt")
    limit = int(getattr(model.config, "max_position_embeddings", 0) or 0)
    if limit:
        lengths = encoding["attention_mask"].sum(dim=1)
        for row, record in enumerate(records):
            if int(lengths[row]) > limit:
                raise ExportError(
                    f"pair {record.pair_id!r}: {int(lengths[row])} subword "
                    f"positions exceed the encoder's limit of {limit}")
    with torch.no_grad():
        outputs = model(**encoding, output_hidden_states=True)
    hidden = outputs.hidden_states[layer].cpu().numpy()
    return [_pooled_sides(hidden[row], encoding.sequence_ids(row),
                          encoding.word_ids(row), record)
            for row, record in enumerate(records)]


def export_corpus(records: Sequence[PairRecord], tokenizer, model,
                  layer: int, batch_size: int
                  ) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
    """Yield ``(pair_id, src_matrix, tgt_matrix)`` in corpus order."""
    for lo in range(0, len(records), batch_size):
        batch = records[lo:lo + batch_size]
        for record, (src, tgt) in zip(batch,
                                      encode_batch(batch, tokenizer, model,
                                                   layer)):
            yield record.pair_id, src, tgt
