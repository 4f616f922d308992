"""MWAEMB1 output plus a JSON sidecar describing the encoding scheme.

Binary layout (all integers and floats little-endian)::

    magic   8 bytes  b"MWAEMB1\\0"
    dim     u32
    count   u32      number of sentence pairs
    per pair:
        id_len  u16, id utf-8 bytes
        n       u32  source length          m  u32  target length
        src     n*dim float32 row-major     tgt  m*dim float32 row-major

The sidecar, written next to the binary as ``<out>.json``, records the
encoder, the layer, and the concatenation template actually used — the
special tokens around the two sentences are encoder-specific.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ExportError

MAGIC = b"MWAEMB1\0"


def write_embeddings(entries: Iterable[tuple[str, np.ndarray, np.ndarray]],
                     dim: int, count: int, path: str | Path) -> None:
    """Stream (pair_id, src_matrix, tgt_matrix) entries to ``path``."""
    written = 0
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<II", dim, count))
        for pair_id, src, tgt in entries:
            encoded = pair_id.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ExportError(f"pair id {pair_id!r} is longer than the "
                                  f"format's 65535-byte limit")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<II", src.shape[0], tgt.shape[0]))
            for matrix in (src, tgt):
                if matrix.shape[1] != dim:
                    raise ExportError(
                        f"pair {pair_id!r}: matrix dim {matrix.shape[1]} "
                        f"does not match encoder dim {dim}")
                handle.write(np.ascontiguousarray(
                    matrix, dtype="<f4").tobytes())
            written += 1
    if written != count:
        raise ExportError(f"{path}: header promises {count} pairs, "
                          f"wrote {written}")


def describe_scheme(tokenizer) -> list[str]:
    """The concatenation template the tokenizer actually produces, e.g.
    ``["[CLS]", "<source>", "[SEP]", "<target>", "[SEP]"]``."""
    encoding = tokenizer([["a"]], [["a"]], is_split_into_words=True)
    template: list[str] = []
    for position, seq in enumerate(encoding.sequence_ids(0)):
        if seq is None:
            template.append(tokenizer.convert_ids_to_tokens(
                encoding["input_ids"][0][position]))
        else:
            run = "<source>" if seq == 0 else "<target>"
            if not template or template[-1] != run:
                template.append(run)
    return template


def write_sidecar(out_path: str | Path, *, encoder: str, layer: str,
                  layer_index: int, dim: int, pairs: int,
                  scheme: list[str]) -> None:
    """Write ``<out>.json`` documenting how the export was produced."""
    sidecar = {
        "encoder": encoder,
        "layer": layer,
        "layer_index": layer_index,
        "dim": dim,
        "pairs": pairs,
        "pair_encoding": scheme,
        "pooling": "mean of each word's subword vectors",
    }
    with open(f"{out_path}.json", "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, indent=2)
        handle.write("\n")
