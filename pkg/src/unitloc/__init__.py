"""Unit-conversion and localization corpus toolkit with a small seq2seq trainer."""

__version__ = "0.1.0"
