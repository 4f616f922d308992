"""Word embedding stores: static type-level tables and contextual pair files.

Static stores use word2vec text format: a ``<vocab> <dim>`` header line,
then one ``<token> <v1> ... <vdim>`` line per type. Unknown tokens map to
the mean of all vectors.

Contextual stores use the MWAEMB1 binary format (all integers and floats
little-endian)::

    magic   8 bytes  b"MWAEMB1\\0"
    dim     u32
    count   u32      number of sentence pairs
    per pair:
        id_len  u16, id utf-8 bytes
        n       u32  source length          m  u32  target length
        src     n*dim float32 row-major     tgt  m*dim float32 row-major

Every lookup returns read-only float64 matrices of shape (length, dim).
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import SentencePair
from .errors import FormatError, ValidationError

MAGIC = b"MWAEMB1\0"


class EmbeddingStore:
    """Token vectors for sentence pairs, from a static or contextual source."""

    def __init__(self, dim: int, *,
                 static: dict[str, np.ndarray] | None = None,
                 unk: np.ndarray | None = None,
                 contextual: dict[str, tuple[np.ndarray, np.ndarray]] | None = None):
        self.dim = dim
        self._static = static
        self._unk = unk
        self._contextual = contextual

    @property
    def is_contextual(self) -> bool:
        return self._contextual is not None

    def _static_rows(self, tokens: tuple[str, ...]) -> np.ndarray:
        assert self._static is not None and self._unk is not None
        rows = np.stack([self._static.get(t, self._unk) for t in tokens])
        rows.setflags(write=False)
        return rows

    def vectors_for(self, pair: SentencePair) -> tuple[np.ndarray, np.ndarray]:
        """Source and target embedding matrices for one sentence pair."""
        if self._contextual is not None:
            entry = self._contextual.get(pair.pair_id)
            if entry is None:
                raise ValidationError(
                    f"no contextual embeddings for pair {pair.pair_id!r}")
            src, tgt = entry
            if src.shape[0] != len(pair.src_tokens) or \
                    tgt.shape[0] != len(pair.tgt_tokens):
                raise ValidationError(
                    f"pair {pair.pair_id!r}: embedding rows "
                    f"({src.shape[0]}, {tgt.shape[0]}) do not match sentence "
                    f"lengths ({len(pair.src_tokens)}, {len(pair.tgt_tokens)})")
            return src, tgt
        return (self._static_rows(pair.src_tokens),
                self._static_rows(pair.tgt_tokens))


def load_static(path: str | Path) -> EmbeddingStore:
    """Load a word2vec-format text embedding table."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2 or not all(p.isdigit() for p in header):
            raise FormatError(f"{path}:1: expected '<vocab> <dim>' header")
        vocab, dim = int(header[0]), int(header[1])
        if vocab < 1 or dim < 1:
            raise FormatError(f"{path}:1: vocab and dim must be positive")
        table: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise FormatError(
                    f"{path}:{line_no}: expected a token and {dim} values, "
                    f"got {len(parts)} fields")
            try:
                vector = np.array([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise FormatError(
                    f"{path}:{line_no}: non-numeric value") from exc
            vector.setflags(write=False)
            table[parts[0]] = vector
    if len(table) != vocab:
        raise FormatError(f"{path}: header promises {vocab} vectors, "
                          f"found {len(table)}")
    unk = np.mean(list(table.values()), axis=0)
    unk.setflags(write=False)
    return EmbeddingStore(dim, static=table, unk=unk)


def _read_exact(handle, count: int, path, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise FormatError(f"{path}: truncated file while reading {what}")
    return data


def load_contextual(path: str | Path) -> EmbeddingStore:
    """Load an MWAEMB1 contextual embedding file."""
    with open(path, "rb") as handle:
        if _read_exact(handle, 8, path, "magic") != MAGIC:
            raise FormatError(f"{path}: not an MWAEMB1 file (bad magic)")
        dim, count = struct.unpack("<II", _read_exact(handle, 8, path, "header"))
        if dim < 1:
            raise FormatError(f"{path}: embedding dim must be positive")
        entries: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for _ in range(count):
            (id_len,) = struct.unpack(
                "<H", _read_exact(handle, 2, path, "id length"))
            pair_id = _read_exact(handle, id_len, path, "pair id").decode("utf-8")
            if pair_id in entries:
                raise FormatError(f"{path}: duplicate pair id {pair_id!r}")
            n, m = struct.unpack("<II", _read_exact(handle, 8, path, "lengths"))
            matrices = []
            for length in (n, m):
                raw = _read_exact(handle, 4 * length * dim, path,
                                  f"vectors for {pair_id!r}")
                matrix = np.frombuffer(raw, dtype="<f4").astype(
                    np.float64).reshape(length, dim)
                matrix.setflags(write=False)
                matrices.append(matrix)
            entries[pair_id] = (matrices[0], matrices[1])
        if handle.read(1):
            raise FormatError(f"{path}: trailing bytes after last pair")
    return EmbeddingStore(dim, contextual=entries)


def write_contextual(entries: Iterable[tuple[str, np.ndarray, np.ndarray]],
                     dim: int, path: str | Path) -> None:
    """Write (pair_id, src_matrix, tgt_matrix) entries as MWAEMB1."""
    items = list(entries)
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<II", dim, len(items)))
        for pair_id, src, tgt in items:
            encoded = pair_id.encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<II", src.shape[0], tgt.shape[0]))
            for matrix in (src, tgt):
                if matrix.shape[1] != dim:
                    raise ValidationError(
                        f"pair {pair_id!r}: matrix dim {matrix.shape[1]} "
                        f"does not match store dim {dim}")
                handle.write(np.ascontiguousarray(
                    matrix, dtype="<f4").tobytes())


def open_store(path: str | Path) -> EmbeddingStore:
    """Open an embedding file, sniffing static vs contextual by magic bytes."""
    with open(path, "rb") as handle:
        head = handle.read(8)
    if head == MAGIC:
        return load_contextual(path)
    return load_static(path)
