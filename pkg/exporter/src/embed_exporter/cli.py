"""Command line: export contextual word embeddings for a pair corpus.

    embed-export --corpus pairs.jsonl --encoder-name <model-or-dir> \\
        --out pairs.memb [--layer last] [--batch-size 8]

One encoder pass per pair (both sentences concatenated), subword vectors
averaged per word, output in the MWAEMB1 binary format with a JSON sidecar
next to it. Exit status 0 on success, 2 on any failure.
"""

from __future__ import annotations

import argparse
import sys

from .corpus import read_corpus
from .encode import export_corpus, load_encoder, resolve_layer
from .errors import ExportError
from .writer import describe_scheme, write_embeddings, write_sidecar


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export contextual word embeddings for a sentence-pair "
                    "corpus.")
    parser.add_argument("--corpus", required=True,
                        help="JSONL sentence-pair corpus")
    parser.add_argument("--encoder-name", required=True,
                        help="pretrained encoder: a model id or a local "
                             "directory")
    parser.add_argument("--out", required=True, help="output MWAEMB1 path")
    parser.add_argument("--layer", default="last",
                        help="hidden-state layer to export: 'last' or an "
                             "index from 0 (embedding output) to the "
                             "encoder depth (default: last)")
    parser.add_argument("--batch-size", type=int, default=8,
                        help="pairs per encoder pass (default: 8)")
    return parser


def run(args: argparse.Namespace) -> int:
    if args.batch_size < 1:
        raise ExportError("--batch-size must be at least 1")
    records = read_corpus(args.corpus)
    tokenizer, model = load_encoder(args.encoder_name)
    layer = resolve_layer(args.layer, int(model.config.num_hidden_layers))
    dim = int(model.config.hidden_size)
    entries = export_corpus(records, tokenizer, model, layer,
                            args.batch_size)
    write_embeddings(entries, dim, len(records), args.out)
    write_sidecar(args.out, encoder=args.encoder_name, layer=args.layer,
                  layer_index=layer, dim=dim, pairs=len(records),
                  scheme=describe_scheme(tokenizer))
    print(f"wrote {len(records)} pairs (dim {dim}) to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
