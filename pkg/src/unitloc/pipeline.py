"""End-to-end glue: text preparation, training, decoding on line corpora.

Checkpoints embed the vocabulary and subword merges, so translation needs
only the checkpoint file and the unit lexicon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .convert import parse_tolerance
from .evaluation import conversion_accuracy
from .locsynth import Side, _scan_side
from .model import EOS_ID, PAD_ID, ModelConfig, UnitTransformer, build_model, greedy_decode
from .quantity import Lexicon
from .seeding import derive_seed
from .textprep import (
    FactorTag,
    SubwordModel,
    annotate_factors,
    apply_subwords_aligned,
    detokenize_subwords,
    expand_factors,
    learn_subwords,
)
from .training import (
    FACTOR_IDS,
    EncodedExample,
    TrainConfig,
    TrainResult,
    Vocab,
    encode_examples,
    train,
)


@dataclass
class TextPipeline:
    """Shared-vocabulary text preparation: optional subwords plus factors."""

    vocab: Vocab
    subwords: SubwordModel | None
    lexicon: Lexicon

    @classmethod
    def build(cls, pairs: Sequence[tuple[str, str]], subword_vocab_size: int, lexicon: Lexicon) -> "TextPipeline":
        """Learn text preparation from a training corpus.

        ``subword_vocab_size`` of 0 disables subwords: the vocabulary is the
        raw whitespace token set (conversion-only training needs no more).
        """
        lines = [s for s, _ in pairs] + [t for _, t in pairs]
        if subword_vocab_size > 0:
            subwords = learn_subwords(lines, subword_vocab_size)
            vocab = Vocab.from_subword_vocab(subwords.vocab)
        else:
            subwords = None
            vocab = Vocab.from_corpus(lines)
        return cls(vocab=vocab, subwords=subwords, lexicon=lexicon)

    def source_pieces(self, line: str) -> tuple[list[str], list[FactorTag]]:
        tokens = line.split()
        if not tokens:
            return [], []
        mentions = _scan_side(tuple(tokens), self.lexicon, Side.SOURCE)
        tags = annotate_factors(tokens, mentions)
        if self.subwords is None:
            return tokens, list(tags)
        aligned = apply_subwords_aligned(tokens, self.subwords)
        return [p for pieces in aligned for p in pieces], expand_factors(tags, aligned)

    def target_pieces(self, line: str) -> list[str]:
        tokens = line.split()
        if self.subwords is None:
            return tokens
        return [p for pieces in apply_subwords_aligned(tokens, self.subwords) for p in pieces]

    def prepare_pairs(self, pairs: Sequence[tuple[str, str]], max_len: int) -> list[EncodedExample]:
        piece_pairs = []
        factor_rows = []
        for src_line, tgt_line in pairs:
            src_pieces, tags = self.source_pieces(src_line)
            tgt_pieces = self.target_pieces(tgt_line)
            piece_pairs.append((" ".join(src_pieces), " ".join(tgt_pieces)))
            factor_rows.append(tags)
        return encode_examples(piece_pairs, self.vocab, self.vocab, factor_rows, max_len)

    def decode_ids(self, ids: Sequence[int]) -> str:
        pieces = self.vocab.decode(ids)
        if self.subwords is None:
            return " ".join(pieces)
        return " ".join(detokenize_subwords(pieces))

    def to_dict(self) -> dict:
        return {
            "vocab": self.vocab.itos,
            "merges": self.subwords.merges if self.subwords else None,
            "subword_vocab": self.subwords.vocab if self.subwords else None,
        }

    @classmethod
    def from_dict(cls, doc: dict, lexicon: Lexicon) -> "TextPipeline":
        vocab = Vocab.__new__(Vocab)
        vocab.itos = list(doc["vocab"])
        vocab.stoi = {t: i for i, t in enumerate(vocab.itos)}
        subwords = None
        if doc.get("merges") is not None:
            subwords = SubwordModel(
                merges=[tuple(m) for m in doc["merges"]],
                vocab={k: int(v) for k, v in doc["subword_vocab"].items()},
            )
        return cls(vocab=vocab, subwords=subwords, lexicon=lexicon)


def decode_corpus(
    model: UnitTransformer,
    pipeline: TextPipeline,
    src_lines: Sequence[str],
    batch_size: int = 128,
    max_len: int | None = None,
) -> list[str]:
    """Greedy-decode a source corpus back to detokenized lines."""
    factors_enabled = model.cfg.factor_embedding_size > 0
    out: list[str] = []
    for lo in range(0, len(src_lines), batch_size):
        chunk = src_lines[lo : lo + batch_size]
        encoded = []
        for line in chunk:
            pieces, tags = pipeline.source_pieces(line)
            ids = pipeline.vocab.encode(pieces) + [EOS_ID]
            tag_ids = [FACTOR_IDS[t] for t in tags] + [FACTOR_IDS[FactorTag.OTHER]]
            encoded.append((ids[: model.cfg.max_seq_len], tag_ids[: model.cfg.max_seq_len]))
        width = max(len(ids) for ids, _ in encoded)
        src = torch.full((len(encoded), width), PAD_ID, dtype=torch.long)
        fac = torch.full((len(encoded), width), PAD_ID, dtype=torch.long)
        for i, (ids, tag_ids) in enumerate(encoded):
            src[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            fac[i, : len(tag_ids)] = torch.tensor(tag_ids, dtype=torch.long)
        results = greedy_decode(model, src, fac if factors_enabled else None, max_len)
        out.extend(pipeline.decode_ids(ids) for ids in results)
    return out


@dataclass
class RunResult:
    model: UnitTransformer
    pipeline: TextPipeline
    train_result: TrainResult


def run_training(
    run_dir: str | Path,
    train_pairs: Sequence[tuple[str, str]],
    val_pairs: Sequence[tuple[str, str]],
    lexicon: Lexicon,
    model_cfg: dict | None = None,
    train_cfg: TrainConfig | None = None,
    subword_vocab_size: int = 0,
    seed: int = 0,
    val_accuracy_examples: int = 256,
    accuracy_tolerance: str = "1e-4",
) -> RunResult:
    """Prepare text, build the model, train, and embed artifacts in checkpoints."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    pipeline = TextPipeline.build(train_pairs, subword_vocab_size, lexicon)

    cfg_kwargs = dict(model_cfg or {})
    cfg = ModelConfig(
        src_vocab_size=len(pipeline.vocab),
        tgt_vocab_size=len(pipeline.vocab),
        **cfg_kwargs,
    )
    tcfg = replace(train_cfg if train_cfg is not None else TrainConfig(), seed=derive_seed(seed, "pipeline", "train"))

    train_examples = pipeline.prepare_pairs(train_pairs, cfg.max_seq_len)
    val_examples = pipeline.prepare_pairs(val_pairs, cfg.max_seq_len) if val_pairs else []

    model = build_model(cfg, seed=derive_seed(seed, "pipeline", "init"))

    tolerance = parse_tolerance(accuracy_tolerance)
    val_src = [s for s, _ in val_pairs][:val_accuracy_examples]
    val_ref = [t for _, t in val_pairs][:val_accuracy_examples]

    def accuracy_fn(m: UnitTransformer) -> float | None:
        if not val_src:
            return None
        hyps = decode_corpus(m, pipeline, val_src, batch_size=128)
        score = conversion_accuracy(hyps, val_ref, tolerance, lexicon)
        return score.accuracy if score.n else None

    result = train(model, train_examples, val_examples, tcfg, run_dir, accuracy_fn=accuracy_fn)

    # re-save checkpoints with the text pipeline embedded for self-contained use
    for path in (result.best_path, result.last_path):
        loaded, header = load_checkpoint(path)
        save_checkpoint(loaded, path, step=header["step"], extra={"text": pipeline.to_dict()})
    best_model, _ = load_checkpoint(result.best_path)
    return RunResult(model=best_model, pipeline=pipeline, train_result=result)


def load_run(checkpoint_path: str | Path, lexicon: Lexicon) -> tuple[UnitTransformer, TextPipeline]:
    """Load a checkpoint plus its embedded text pipeline."""
    model, header = load_checkpoint(checkpoint_path)
    text = header.get("extra", {}).get("text")
    if text is None:
        raise ValueError(f"{checkpoint_path}: checkpoint lacks embedded text pipeline")
    return model, TextPipeline.from_dict(text, lexicon)
