"""Command-line interface: train / align / eval / stats / edits.

Exit codes: 0 success, 2 validation or usage error, 3 numeric failure.
Every output directory receives a ``config.json`` echo of the effective
configuration. Config files use ``key = value`` lines (``#`` comments);
flags override file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .corpus import (format_pharaoh_line, read_jsonl, read_pharaoh,
                     write_pharaoh)
from .checkpoint import load_checkpoint
from .data import Setting, WordPairs, validate_word_pairs
from .edits import apply_program, derive_program, format_program
from .embeddings import open_store
from .errors import NumericError, SpanAlignError, ValidationError
from .evaluate import corpus_eval, corpus_stats, render_report, shape_stats
from .parallel import default_workers
from .pipeline import align_corpus
from .symmetrize import MERGE_STRATEGIES
from .trainer import TrainConfig, train


def _config_from_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(),
                                   start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ValidationError(f"{path}:{line_no}: expected 'key = value'")
        key, value = (part.strip() for part in text.split("=", 1))
        values[key] = value
    return values


_CONFIG_PARSERS = {
    "learning_rate": float, "weight_decay": float, "epochs": int,
    "max_span": int, "batch_size": int, "seed": int,
    "setting": Setting.parse, "cost_scale": float, "merge": str,
    "hidden": int,
}


def _build_train_config(args: argparse.Namespace) -> TrainConfig:
    values: dict = {}
    if args.config:
        for key, raw in _config_from_file(args.config).items():
            if key not in _CONFIG_PARSERS:
                raise ValidationError(f"{args.config}: unknown config key "
                                      f"{key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](raw)
            except ValueError as exc:
                raise ValidationError(
                    f"{args.config}: bad value for {key!r}: {raw!r}") from exc
    for key in _CONFIG_PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return TrainConfig(**values)


def _echo_config(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")


def _cmd_train(args: argparse.Namespace) -> int:
    config = _build_train_config(args)
    corpus = read_jsonl(args.corpus)
    dev = read_jsonl(args.dev)
    store = open_store(args.embeddings)
    out_dir = Path(args.out_dir)
    payload = dataclasses.asdict(config)
    payload["setting"] = config.setting.value
    payload.update(corpus=str(args.corpus), dev=str(args.dev),
                   embeddings=str(args.embeddings), workers=args.workers)
    _echo_config(out_dir, payload)
    result = train(corpus, dev, store, config, out_dir,
                   workers=args.workers, resume=args.resume)
    print(f"best dev F1 {result.best_f1:.4f}; "
          f"checkpoints in {out_dir}; log at {result.log_path}")
    return 0


def _cmd_align(args: argparse.Namespace) -> int:
    corpus = read_jsonl(args.corpus)
    store = open_store(args.embeddings)
    params, _ = load_checkpoint(args.model)
    out_dir = Path(args.out_dir)
    _echo_config(out_dir, {
        "corpus": str(args.corpus), "model": str(args.model),
        "embeddings": str(args.embeddings), "merge": args.merge,
        "extend_threshold": args.extend_threshold,
        "bidi_threshold": args.bidi_threshold, "workers": args.workers,
    })
    aligned = align_corpus(corpus, store, params, merge=args.merge,
                           extend_threshold=args.extend_threshold,
                           bidi_threshold=args.bidi_threshold,
                           workers=args.workers)
    write_pharaoh((pairs for _, pairs in aligned),
                  out_dir / "alignments.pharaoh")
    with open(out_dir / "alignments.jsonl", "w", encoding="utf-8") as handle:
        for pair, pairs in aligned:
            handle.write(json.dumps(
                {"id": pair.pair_id,
                 "pairs": [list(p) for p in sorted(pairs)]}) + "\n")
    print(f"aligned {len(aligned)} pairs into {out_dir}")
    return 0


def _read_predictions(path: str, corpus) -> list[WordPairs]:
    """Predicted alignments: JSONL keyed by id, or Pharaoh by line order."""
    if str(path).endswith(".jsonl"):
        by_id: dict[str, WordPairs] = {}
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                record = json.loads(line)
                by_id[record["id"]] = frozenset(
                    (int(i), int(j)) for i, j in record["pairs"])
        missing = [pair.pair_id for pair in corpus
                   if pair.pair_id not in by_id]
        if missing:
            raise ValidationError(f"{path}: no predictions for pair ids "
                                  f"{missing[:5]}")
        return [by_id[pair.pair_id] for pair in corpus]
    rows = read_pharaoh(path)
    if len(rows) != len(corpus):
        raise ValidationError(
            f"{path}: {len(rows)} alignment lines for {len(corpus)} "
            f"corpus pairs")
    return [sure | poss for sure, poss in rows]


def _cmd_eval(args: argparse.Namespace) -> int:
    corpus = read_jsonl(args.gold)
    preds = _read_predictions(args.pred, corpus)
    for pair, pred in zip(corpus, preds):
        validate_word_pairs(pred, len(pair.src_tokens),
                            len(pair.tgt_tokens),
                            context=f"prediction for {pair.pair_id!r}")
    report = corpus_eval(zip(corpus, preds), args.setting)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(render_report(report))
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    corpus = read_jsonl(args.corpus)
    stats = corpus_stats(corpus, args.setting)
    shapes = shape_stats(corpus, args.setting)
    if args.json:
        print(json.dumps({"corpus": stats, "shapes": shapes}, indent=2))
        return 0
    for key, value in stats.items():
        rendered = f"{value:.2f}" if isinstance(value, float) else str(value)
        print(f"{key}: {rendered}")
    print("shapes:")
    for key in sorted(shapes, key=lambda k: (k == "irregular", k)):
        print(f"  {key}: {shapes[key]}")
    return 0


def _cmd_edits(args: argparse.Namespace) -> int:
    corpus = read_jsonl(args.corpus)
    if args.alignments:
        preds = _read_predictions(args.alignments, corpus)
    else:
        preds = [pair.gold_pairs(args.setting) for pair in corpus]
    lines = []
    for pair, alignment in zip(corpus, preds):
        validate_word_pairs(alignment, len(pair.src_tokens),
                            len(pair.tgt_tokens),
                            context=f"alignment for {pair.pair_id!r}")
        program = derive_program(pair.src_tokens, pair.tgt_tokens, alignment)
        rebuilt = apply_program(pair.src_tokens, program)
        if rebuilt != list(pair.tgt_tokens):
            raise ValidationError(
                f"pair {pair.pair_id!r}: derived program does not "
                f"reconstruct the target")
        lines.append(format_program(program))
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + ("\n" if lines else ""))
    print(f"wrote {len(lines)} programs to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanalign",
        description="Monolingual word/phrase alignment: train, decode, "
                    "evaluate, and derive edit programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    train_p = sub.add_parser("train", help="train a model")
    train_p.add_argument("--corpus", required=True)
    train_p.add_argument("--dev", required=True)
    train_p.add_argument("--embeddings", required=True)
    train_p.add_argument("--config", help="key = value config file")
    train_p.add_argument("--out-dir", required=True)
    train_p.add_argument("--resume", help="epoch checkpoint to resume from")
    train_p.add_argument("--workers", type=int, default=default_workers())
    train_p.add_argument("--learning-rate", dest="learning_rate", type=float)
    train_p.add_argument("--weight-decay", dest="weight_decay", type=float)
    train_p.add_argument("--epochs", type=int)
    train_p.add_argument("--max-span", dest="max_span", type=int)
    train_p.add_argument("--batch-size", dest="batch_size", type=int)
    train_p.add_argument("--seed", type=int)
    train_p.add_argument("--setting", type=Setting.parse,
                         choices=list(Setting))
    train_p.add_argument("--cost-scale", dest="cost_scale", type=float)
    train_p.add_argument("--merge", choices=MERGE_STRATEGIES)
    train_p.add_argument("--hidden", type=int)
    train_p.set_defaults(func=_cmd_train)

    align_p = sub.add_parser("align", help="decode alignments")
    align_p.add_argument("--corpus", required=True)
    align_p.add_argument("--model", required=True)
    align_p.add_argument("--embeddings", required=True)
    align_p.add_argument("--merge", choices=MERGE_STRATEGIES,
                         default="intersection")
    align_p.add_argument("--extend-threshold", dest="extend_threshold",
                         type=float)
    align_p.add_argument("--bidi-threshold", dest="bidi_threshold",
                         type=float, default=0.4)
    align_p.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    align_p.add_argument("--workers", type=int, default=default_workers())
    align_p.set_defaults(func=_cmd_align)

    eval_p = sub.add_parser("eval", help="score predictions against gold")
    eval_p.add_argument("--pred", required=True,
                        help=".jsonl (id-keyed) or Pharaoh (line order)")
    eval_p.add_argument("--gold", required=True, help="gold corpus JSONL")
    eval_p.add_argument("--setting", type=Setting.parse,
                        default=Setting.SURE_PLUS_POSS)
    eval_p.add_argument("--json", action="store_true")
    eval_p.set_defaults(func=_cmd_eval)

    stats_p = sub.add_parser("stats", help="corpus and shape statistics")
    stats_p.add_argument("--corpus", required=True)
    stats_p.add_argument("--setting", type=Setting.parse,
                         default=Setting.SURE_PLUS_POSS)
    stats_p.add_argument("--json", action="store_true")
    stats_p.set_defaults(func=_cmd_stats)

    edits_p = sub.add_parser("edits", help="derive edit programs")
    edits_p.add_argument("--corpus", required=True)
    edits_p.add_argument("--alignments",
                         help="predicted alignments; defaults to gold")
    edits_p.add_argument("--setting", type=Setting.parse,
                         default=Setting.SURE_PLUS_POSS)
    edits_p.add_argument("--out", required=True)
    edits_p.set_defaults(func=_cmd_edits)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SpanAlignError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
