"""Streaming bitext toolkit: filtering, deduplication, backtranslation noising,
tagging and mixing, BLEU, and an iterative backtranslation driver."""

__version__ = "0.1.0"
