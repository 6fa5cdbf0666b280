"""Subword vocabulary learning/application with digit protection; source factors.

Subwords follow the byte-pair merge scheme: words decompose into characters
(the final character carries an end-of-word mark), the highest-frequency
adjacent symbol pair is merged greedily, and tokens render with an ``@@``
continuation marker on non-final pieces, so detokenization is an exact
inverse. Digits and the decimal separator are protected: no merge rule may
contain them, which keeps digit-tokenized numbers intact at every stage.

Source factors tag each token as a distance digit, temperature digit, or
other; pieces of a subword-split token inherit the token's tag.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<s>", "</s>"
SPECIAL_TOKENS = (PAD, UNK, BOS, EOS)

_EOW = "▁"  # end-of-word mark used internally during merge learning
PROTECTED_CHARS = frozenset("0123456789.")


class CorpusTooSmall(Exception):
    """Distinct base symbols already exceed the demanded vocabulary size."""


class SpanOverlap(Exception):
    """Factor annotation spans overlap."""


class FactorTag(Enum):
    DIST_DIGIT = "D"
    TEMP_DIGIT = "T"
    OTHER = "O"


@dataclass
class SubwordModel:
    """Ordered merge rules plus the rendered-token vocabulary."""

    merges: list[tuple[str, str]]
    vocab: dict[str, int]
    protected: frozenset[str] = PROTECTED_CHARS

    def __post_init__(self) -> None:
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}

    @property
    def rank(self) -> dict[tuple[str, str], int]:
        return self._ranks

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#subwords v1 merges={len(self.merges)}\n")
            for a, b in self.merges:
                fh.write(f"{a}\t{b}\n")
            fh.write("#vocab\n")
            for token, idx in sorted(self.vocab.items(), key=lambda kv: kv[1]):
                fh.write(f"{token}\t{idx}\n")

    @classmethod
    def load(cls, path: str | Path) -> "SubwordModel":
        merges: list[tuple[str, str]] = []
        vocab: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if not header.startswith("#subwords v1 merges="):
                raise ValueError(f"{path}: not a subword model file")
            n_merges = int(header.rsplit("=", 1)[1])
            for _ in range(n_merges):
                a, b = fh.readline().rstrip("\n").split("\t")
                merges.append((a, b))
            if fh.readline().rstrip("\n") != "#vocab":
                raise ValueError(f"{path}: missing vocab section")
            for line in fh:
                token, idx = line.rstrip("\n").split("\t")
                vocab[token] = int(idx)
        return cls(merges=merges, vocab=vocab)


def _word_symbols(word: str) -> tuple[str, ...]:
    chars = list(word)
    chars[-1] = chars[-1] + _EOW
    return tuple(chars)


def _is_protected(symbol: str, protected: frozenset[str]) -> bool:
    return any(ch in protected for ch in symbol.replace(_EOW, ""))


def _render(symbols: Sequence[str]) -> list[str]:
    """Rendered pieces: strip the end-of-word mark, mark non-final pieces @@."""
    out = []
    for i, sym in enumerate(symbols):
        if sym.endswith(_EOW):
            out.append(sym[: -len(_EOW)])
        else:
            out.append(sym + "@@")
    return out


def _merge_word(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    out: list[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(pair[0] + pair[1])
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def learn_subwords(
    corpus: Iterable[str],
    vocab_size: int,
    protected: frozenset[str] = PROTECTED_CHARS,
) -> SubwordModel:
    """Learn merges greedily by pair frequency until the vocabulary is full.

    The vocabulary contains the special tokens, both rendered variants of
    every character seen (plus the protected characters), and the rendered
    forms produced by merges. Unused slots left when no mergeable pair
    remains are filled with reserved placeholders so the size is exact.
    """
    word_freq: Counter[str] = Counter()
    for line in corpus:
        word_freq.update(line.split())
    if not word_freq:
        raise CorpusTooSmall("empty corpus")

    words: dict[str, tuple[str, ...]] = {w: _word_symbols(w) for w in word_freq}

    chars = set("".join(word_freq)) | set(protected)
    base_vocab: list[str] = list(SPECIAL_TOKENS)
    for ch in sorted(chars):
        base_vocab.append(ch)
        base_vocab.append(ch + "@@")
    if len(base_vocab) > vocab_size:
        raise CorpusTooSmall(f"{len(base_vocab)} base symbols exceed the demanded vocabulary of {vocab_size}")

    vocab: dict[str, int] = {tok: i for i, tok in enumerate(base_vocab)}
    merges: list[tuple[str, str]] = []

    def rendered_forms(symbol: str) -> list[str]:
        if symbol.endswith(_EOW):
            return [symbol[: -len(_EOW)]]
        return [symbol + "@@", symbol]

    while len(vocab) < vocab_size:
        pair_freq: Counter[tuple[str, str]] = Counter()
        for word, symbols in words.items():
            freq = word_freq[word]
            for a, b in zip(symbols, symbols[1:]):
                pair_freq[(a, b)] += freq
        candidates = [
            (freq, pair)
            for pair, freq in pair_freq.items()
            if not (_is_protected(pair[0], protected) or _is_protected(pair[1], protected))
        ]
        if not candidates:
            break
        # highest frequency wins; ties break lexicographically for determinism
        candidates.sort(key=lambda fp: (-fp[0], fp[1]))
        _, best = candidates[0]
        new_symbol = best[0] + best[1]
        new_forms = [f for f in rendered_forms(new_symbol) if f not in vocab]
        if len(vocab) + len(new_forms) > vocab_size:
            break
        merges.append(best)
        for form in new_forms:
            vocab[form] = len(vocab)
        words = {w: _merge_word(s, best) for w, s in words.items()}

    reserved = 0
    while len(vocab) < vocab_size:
        vocab[f"<reserved_{reserved}>"] = len(vocab)
        reserved += 1
    return SubwordModel(merges=merges, vocab=vocab, protected=protected)


def _encode_word(word: str, model: SubwordModel) -> list[str]:
    symbols = list(_word_symbols(word))
    ranks = model.rank
    while len(symbols) > 1:
        best_rank, best_i = None, None
        for i, pair in enumerate(zip(symbols, symbols[1:])):
            r = ranks.get(pair)
            if r is not None and (best_rank is None or r < best_rank):
                best_rank, best_i = r, i
        if best_i is None:
            break
        symbols[best_i : best_i + 2] = [symbols[best_i] + symbols[best_i + 1]]
    return _render(symbols)


def apply_subwords_aligned(tokens: Sequence[str], model: SubwordModel) -> list[list[str]]:
    """Per-token subword pieces; unknown pieces map to the unk token."""
    out: list[list[str]] = []
    for token in tokens:
        pieces = _encode_word(token, model)
        out.append([p if p in model.vocab else UNK for p in pieces])
    return out


def apply_subwords(tokens: Sequence[str], model: SubwordModel) -> list[str]:
    """Deterministic subword split of a token sequence (flat)."""
    return [p for pieces in apply_subwords_aligned(tokens, model) for p in pieces]


def detokenize_subwords(pieces: Sequence[str]) -> list[str]:
    """Exact inverse of apply_subwords for unk-free sequences."""
    tokens: list[str] = []
    buffer = ""
    for piece in pieces:
        if piece.endswith("@@"):
            buffer += piece[:-2]
        else:
            tokens.append(buffer + piece)
            buffer = ""
    if buffer:
        tokens.append(buffer)
    return tokens


def annotate_factors(tokens: Sequence[str], matches: Sequence) -> list[FactorTag]:
    """One tag per token: digits inside a unit-expression span get the span's
    dimension tag, everything else (unit words, separators, minus) is OTHER.

    ``matches`` are UnitMatch-like objects with a ``span`` and a ``quantity``.
    """
    spans = sorted(matches, key=lambda m: m.span.start)
    for a, b in zip(spans, spans[1:]):
        if a.span.stop > b.span.start:
            raise SpanOverlap(f"spans [{a.span.start},{a.span.stop}) and [{b.span.start},{b.span.stop}) overlap")
    tags = [FactorTag.OTHER] * len(tokens)
    for m in spans:
        if m.span.stop > len(tokens):
            raise ValueError("span exceeds token sequence")
        tag = FactorTag.DIST_DIGIT if m.quantity.unit.dimension == "distance" else FactorTag.TEMP_DIGIT
        for i in range(m.span.start, m.span.stop):
            if tokens[i].isdigit():
                tags[i] = tag
    return tags


def expand_factors(tags: Sequence[FactorTag], aligned_pieces: Sequence[Sequence[str]]) -> list[FactorTag]:
    """Extend token-level tags across subword splits: pieces inherit the tag."""
    if len(tags) != len(aligned_pieces):
        raise ValueError("one tag per token required")
    out: list[FactorTag] = []
    for tag, pieces in zip(tags, aligned_pieces):
        out.extend([tag] * len(pieces))
    return out


def write_factor_file(rows: Iterable[Sequence[FactorTag]], path: str | Path) -> None:
    """Factor stream: one line per sentence, space-separated tags."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(" ".join(tag.value for tag in row) + "\n")


def read_factor_file(path: str | Path) -> list[list[FactorTag]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rows.append([FactorTag(v) for v in line.split()])
    return rows
