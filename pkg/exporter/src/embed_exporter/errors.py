"""The exporter's single failure type."""


class ExportError(Exception):
    """Bad input, an unusable encoder, or a word the tokenizer cannot carry."""
