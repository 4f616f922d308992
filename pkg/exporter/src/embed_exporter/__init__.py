"""Contextual word-embedding exporter for aligned sentence-pair corpora.

Runs a pretrained encoder once over each concatenated sentence pair,
averages subword vectors into word vectors, and writes the MWAEMB1 binary
consumed by the alignment engine, plus a JSON sidecar describing the
encoder-specific concatenation scheme.
"""

__version__ = "0.1.0"
