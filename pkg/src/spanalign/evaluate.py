"""Alignment evaluation: precision/recall/F1, exact match, corpus statistics.

Conventions: empty prediction scores precision 1.0 against empty gold and
0.0 otherwise; empty gold scores recall 1.0; F1 is 0 when P + R = 0. A word
pair is "identical" when its case-folded surface forms match exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .data import SentencePair, Setting, WordPairs, components


@dataclass
class Tally:
    """Micro-average accumulator: raw counts, not per-pair averages."""

    hit: int = 0  # |pred ∩ gold|
    pred: int = 0  # |pred|
    gold: int = 0  # |gold|

    def add(self, pred: WordPairs, gold: WordPairs) -> None:
        self.hit += len(pred & gold)
        self.pred += len(pred)
        self.gold += len(gold)

    def metrics(self) -> tuple[float, float, float]:
        precision = self.hit / self.pred if self.pred else 1.0
        recall = self.hit / self.gold if self.gold else 1.0
        if self.pred == 0 and self.gold > 0:
            precision = 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        return precision, recall, f1


def prf(pred: WordPairs, gold: WordPairs) -> tuple[float, float, float]:
    """Precision, recall, F1 of one predicted alignment against gold."""
    tally = Tally()
    tally.add(pred, gold)
    return tally.metrics()


def exact_match(pred: WordPairs, gold: WordPairs) -> bool:
    return pred == gold


def is_identical(pair: SentencePair, link: tuple[int, int]) -> bool:
    i, j = link
    return pair.src_tokens[i].casefold() == pair.tgt_tokens[j].casefold()


def _split_identical(pair: SentencePair, pairs: WordPairs
                     ) -> tuple[WordPairs, WordPairs]:
    identical = frozenset(p for p in pairs if is_identical(pair, p))
    return identical, pairs - identical


def breakdown(pred: WordPairs, gold: WordPairs, pair: SentencePair
              ) -> dict[str, tuple[float, float, float]]:
    """prf separately on the identical and non-identical subsets."""
    pred_id, pred_non = _split_identical(pair, pred)
    gold_id, gold_non = _split_identical(pair, gold)
    return {"identical": prf(pred_id, gold_id),
            "non_identical": prf(pred_non, gold_non)}


def corpus_eval(items: Iterable[tuple[SentencePair, WordPairs]],
                setting: Setting) -> dict:
    """Micro-averaged corpus report over (pair, predicted alignment) items.

    Counts are pooled across pairs before computing P/R/F1 (micro), overall
    and split by the identical predicate; EM is the percentage of pairs
    whose prediction equals gold exactly.
    """
    overall, ident, non_ident = Tally(), Tally(), Tally()
    matches = 0
    count = 0
    for pair, pred in items:
        gold = pair.gold_pairs(setting)
        count += 1
        matches += exact_match(pred, gold)
        overall.add(pred, gold)
        pred_id, pred_non = _split_identical(pair, pred)
        gold_id, gold_non = _split_identical(pair, gold)
        ident.add(pred_id, gold_id)
        non_ident.add(pred_non, gold_non)

    def block(tally: Tally) -> dict:
        precision, recall, f1 = tally.metrics()
        return {"precision": precision, "recall": recall, "f1": f1}

    report = {"pairs": count, **block(overall),
              "em": 100.0 * matches / count if count else 100.0,
              "identical": block(ident),
              "non_identical": block(non_ident)}
    return report


def corpus_stats(corpus: Iterable[SentencePair], setting: Setting) -> dict:
    """Alignment statistics over gold: aligned-token percentage, word vs
    phrase percentages (weighted by word-pair counts per component),
    identical percentage, and mean longer/shorter sentence lengths."""
    aligned_tokens = 0
    total_tokens = 0
    word_links = 0
    phrase_links = 0
    identical_links = 0
    total_links = 0
    longer_sum = 0
    shorter_sum = 0
    count = 0
    for pair in corpus:
        gold = pair.gold_pairs(setting)
        n, m = len(pair.src_tokens), len(pair.tgt_tokens)
        count += 1
        longer_sum += max(n, m)
        shorter_sum += min(n, m)
        total_tokens += n + m
        aligned_tokens += len({i for i, _ in gold}) + len({j for _, j in gold})
        total_links += len(gold)
        identical_links += sum(is_identical(pair, link) for link in gold)
        for src_words, tgt_words in components(gold):
            edges = sum(1 for i, j in gold
                        if i in src_words and j in tgt_words)
            if len(src_words) == 1 and len(tgt_words) == 1:
                word_links += edges
            else:
                phrase_links += edges

    def pct(part: int, whole: int) -> float:
        return 100.0 * part / whole if whole else 0.0

    return {
        "pairs": count,
        "aligned_token_pct": pct(aligned_tokens, total_tokens),
        "word_pct": pct(word_links, total_links),
        "phrase_pct": pct(phrase_links, total_links),
        "identical_pct": pct(identical_links, total_links),
        "non_identical_pct": pct(total_links - identical_links, total_links),
        "mean_longer_len": longer_sum / count if count else 0.0,
        "mean_shorter_len": shorter_sum / count if count else 0.0,
    }


def shape_stats(corpus: Iterable[SentencePair], setting: Setting
                ) -> dict[str, int]:
    """Word-pair counts per alignment-component shape.

    A component forming a complete a-by-b bipartite block is keyed "axb"
    and contributes a*b pairs; any incomplete component contributes its
    edge count under "irregular".
    """
    counts: dict[str, int] = {}
    for pair in corpus:
        gold = pair.gold_pairs(setting)
        for src_words, tgt_words in components(gold):
            edges = sum(1 for i, j in gold
                        if i in src_words and j in tgt_words)
            a, b = len(src_words), len(tgt_words)
            key = f"{a}x{b}" if edges == a * b else "irregular"
            counts[key] = counts.get(key, 0) + edges
    return counts


def _format_row(cells: list[str], widths: list[int]) -> str:
    return "  ".join(cell.rjust(width) if idx else cell.ljust(width)
                     for idx, (cell, width) in enumerate(zip(cells, widths)))


def render_report(report: dict) -> str:
    """Plain-text table form of a corpus_eval report."""
    rows = [["subset", "P", "R", "F1"],
            ["overall"] + [f"{report[k]:.4f}"
                           for k in ("precision", "recall", "f1")]]
    for name in ("identical", "non_identical"):
        rows.append([name] + [f"{report[name][k]:.4f}"
                              for k in ("precision", "recall", "f1")])
    widths = [max(len(row[col]) for row in rows) for col in range(4)]
    lines = [_format_row(row, widths) for row in rows]
    lines.append(f"pairs: {report['pairs']}   EM: {report['em']:.2f}%")
    return "\n".join(lines)
