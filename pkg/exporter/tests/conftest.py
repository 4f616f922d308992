"""Fixtures: a tiny random-weight WordPiece encoder and corpus builders."""

import json

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast
from transformers.utils import logging as hf_logging

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()

# Hand-picked pieces so that multi-subword splits are known by position:
# "unhappyness" -> un ##happy ##ness, "dogs" -> dog ##s,
# "running" -> run ##ning, "mat." -> mat ., anything else -> [UNK].
VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "the", "cat", "sat", "on", "a", "mat", "un", "##happy", "##ness",
         "dog", "##s", "run", "##ning", "!", ",", "."]


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    """A two-layer, 16-dim, randomly initialized encoder saved to disk."""
    target = tmp_path_factory.mktemp("encoder")
    vocab_file = target / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(vocab_file))
    torch.manual_seed(20240818)
    model = BertModel(BertConfig(
        vocab_size=len(VOCAB), hidden_size=16, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=32,
        max_position_embeddings=48))
    tokenizer.save_pretrained(target)
    model.save_pretrained(target)
    return str(target)


@pytest.fixture()
def make_corpus(tmp_path):
    """Write JSONL rows to a file and return its path."""

    def _write(rows, name="pairs.jsonl"):
        path = tmp_path / name
        path.write_text("\n".join(json.dumps(row) for row in rows) + "\n",
                        encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture()
def corpus_file(make_corpus):
    return make_corpus([
        {"id": "p0",
         "source_tokens": ["the", "cat", "sat", "on", "a", "mat."],
         "target_tokens": ["a", "cat", "sat", "!"],
         "sure": [[1, 1], [2, 2]], "poss": []},
        {"id": "p1",
         "source_tokens": ["unhappyness", "dogs", "running"],
         "target_tokens": ["the", "unhappyness", ","]},
        {"id": "pär-2",
         "source_tokens": ["zebra", "sat"],
         "target_tokens": ["the", "zebra"]},
        {"id": "p3", "source_tokens": ["running"], "target_tokens": ["run"]},
    ])
