"""Monolingual word and phrase alignment with a neural semi-Markov model.

Sentence pairs are aligned by segmenting the source into spans and labeling
each span with a target span or NULL; a globally normalized model scores
segmentations, trains on gold word alignments, decodes with Viterbi in both
directions, and symmetrizes the results. Includes evaluation utilities and
edit-program derivation for sentence rewriting.
"""

from .data import (Direction, GoldDerivation, SentencePair, Setting, Span,
                   SpanAlignmentSequence, WordPairs, components,
                   derive_gold_spans, to_word_pairs, transpose_pairs)
from .errors import (FormatError, NumericError, SpanAlignError,
                     ValidationError)
from .lattice import KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "Direction", "GoldDerivation", "SentencePair", "Setting", "Span",
    "SpanAlignmentSequence", "WordPairs", "components", "derive_gold_spans",
    "to_word_pairs", "transpose_pairs", "FormatError", "NumericError",
    "SpanAlignError", "ValidationError", "KERNEL_BACKEND", "__version__",
]
