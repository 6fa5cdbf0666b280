"""Training loop: Adam with inverse-square-root warmup, early stopping,
TSV metric log, best/last checkpoints.

An epoch is one pass over the training corpus. Validation (loss, plus
conversion accuracy through an optional callback) runs every epoch; early
stopping waits ``patience`` evaluations without a validation-loss
improvement. With a fixed seed and a single compute thread two runs produce
byte-identical metric logs and checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import torch

from .checkpoint import save_checkpoint
from .model import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    UnitTransformer,
    forward_loss,
)
from .seeding import derive_rng, derive_seed
from .textprep import FactorTag, SPECIAL_TOKENS

FACTOR_IDS = {FactorTag.OTHER: 1, FactorTag.DIST_DIGIT: 2, FactorTag.TEMP_DIGIT: 3}


class NonFiniteLoss(Exception):
    """Training aborted on a NaN/inf loss; message carries diagnostics."""


class Vocab:
    """Token <-> id mapping with the four reserved specials at 0..3."""

    def __init__(self, tokens: Sequence[str]):
        self.itos = list(SPECIAL_TOKENS) + [t for t in tokens if t not in SPECIAL_TOKENS]
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    @classmethod
    def from_corpus(cls, lines) -> "Vocab":
        seen: dict[str, None] = {}
        for line in lines:
            for token in line.split():
                seen.setdefault(token, None)
        return cls(sorted(seen))

    @classmethod
    def from_subword_vocab(cls, vocab: dict[str, int]) -> "Vocab":
        ordered = [t for t, _ in sorted(vocab.items(), key=lambda kv: kv[1])]
        return cls(ordered)

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.itos[i] for i in ids if i not in (PAD_ID, BOS_ID, EOS_ID)]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.itos), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        itos = Path(path).read_text(encoding="utf-8").splitlines()
        vocab = cls.__new__(cls)
        vocab.itos = itos
        vocab.stoi = {t: i for i, t in enumerate(itos)}
        return vocab


@dataclass
class EncodedExample:
    src: list[int]
    factors: list[int]
    tgt: list[int]


def encode_examples(
    pairs: Sequence[tuple[str, str]],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    factor_rows: Sequence[Sequence[FactorTag]] | None,
    max_len: int,
) -> list[EncodedExample]:
    """Token ids with eos on the source and target; over-length pairs dropped."""
    out: list[EncodedExample] = []
    for i, (src_line, tgt_line) in enumerate(pairs):
        src_ids = src_vocab.encode(src_line.split()) + [EOS_ID]
        tgt_ids = tgt_vocab.encode(tgt_line.split()) + [EOS_ID]
        if len(src_ids) > max_len or len(tgt_ids) + 1 > max_len:
            continue
        if factor_rows is not None:
            tags = [FACTOR_IDS[t] for t in factor_rows[i]] + [FACTOR_IDS[FactorTag.OTHER]]
            if len(tags) != len(src_ids):
                raise ValueError(f"line {i}: {len(tags)} factors for {len(src_ids)} source tokens")
        else:
            tags = [FACTOR_IDS[FactorTag.OTHER]] * len(src_ids)
        out.append(EncodedExample(src_ids, tags, tgt_ids))
    return out


@dataclass
class Batch:
    src: torch.Tensor
    factors: torch.Tensor
    tgt_in: torch.Tensor
    tgt_out: torch.Tensor


def make_batch(examples: Sequence[EncodedExample]) -> Batch:
    b = len(examples)
    s = max(len(e.src) for e in examples)
    t = max(len(e.tgt) for e in examples)
    src = torch.full((b, s), PAD_ID, dtype=torch.long)
    factors = torch.full((b, s), PAD_ID, dtype=torch.long)
    tgt_in = torch.full((b, t + 1), PAD_ID, dtype=torch.long)
    tgt_out = torch.full((b, t + 1), PAD_ID, dtype=torch.long)
    for i, e in enumerate(examples):
        src[i, : len(e.src)] = torch.tensor(e.src, dtype=torch.long)
        factors[i, : len(e.factors)] = torch.tensor(e.factors, dtype=torch.long)
        tgt_in[i, 0] = BOS_ID
        tgt_in[i, 1 : len(e.tgt) + 1] = torch.tensor(e.tgt, dtype=torch.long)
        tgt_out[i, : len(e.tgt)] = torch.tensor(e.tgt, dtype=torch.long)
    return Batch(src, factors, tgt_in, tgt_out)


@dataclass
class TrainConfig:
    """Optimization settings. The optimizer and schedule are toolkit choices
    (adaptive moments, inverse-square-root warmup), not values taken from the
    reference experiments. The default warmup is sized for desk-scale runs,
    whose whole budget is a few thousand steps."""

    max_epochs: int = 100
    batch_size: int = 256
    label_smoothing: float = 0.1
    lr_peak: float = 1e-3
    warmup_steps: int = 500
    adam_betas: tuple[float, float] = (0.9, 0.98)
    adam_eps: float = 1e-9
    grad_clip: float = 1.0
    patience: int = 10  # evaluations without val-loss improvement
    eval_every_epochs: int = 1
    selection: str = "val_loss"  # best-checkpoint metric: val_loss | val_accuracy
    seed: int = 0
    threads: int = 1  # single compute thread keeps runs bit-reproducible

    def __post_init__(self) -> None:
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValueError("label smoothing must be in [0, 1)")


def isr_learning_rate(step: int, peak: float, warmup: int) -> float:
    """Linear warmup to ``peak`` then inverse-square-root decay."""
    step = max(step, 1)
    return peak * min(step / warmup, math.sqrt(warmup / step))


@dataclass
class TrainResult:
    best_path: Path
    last_path: Path
    log_path: Path
    best_val_loss: float
    steps: int
    history: list[dict] = field(default_factory=list)


AccuracyFn = Callable[[UnitTransformer], Optional[float]]


def train(
    model: UnitTransformer,
    train_examples: Sequence[EncodedExample],
    val_examples: Sequence[EncodedExample],
    cfg: TrainConfig,
    run_dir: str | Path,
    accuracy_fn: AccuracyFn | None = None,
) -> TrainResult:
    """Run the optimization loop; returns checkpoint paths and history.

    The metric log has one row per evaluation: step, mean training loss since
    the previous evaluation, validation loss, and validation conversion
    accuracy ("-" when no callback is given).
    """
    if not train_examples:
        raise ValueError("no training examples")
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    torch.set_num_threads(cfg.threads)
    torch.manual_seed(derive_seed(cfg.seed, "train", "torch"))
    order_rng = derive_rng(cfg.seed, "train", "order")

    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.lr_peak, betas=cfg.adam_betas, eps=cfg.adam_eps
    )
    log_path = run_dir / "metrics.tsv"
    best_path = run_dir / "best.ulck"
    last_path = run_dir / "last.ulck"

    step = 0
    best_val = math.inf
    best_metric = math.inf
    evals_since_best = 0
    history: list[dict] = []
    factors_enabled = model.cfg.factor_embedding_size > 0

    with open(log_path, "w", encoding="utf-8") as log:
        log.write("step\tloss\tval_loss\tval_accuracy\n")
        stop = False
        running_loss, running_count = 0.0, 0
        for epoch in range(1, cfg.max_epochs + 1):
            model.train()
            order = list(range(len(train_examples)))
            order_rng.shuffle(order)
            for lo in range(0, len(order), cfg.batch_size):
                batch = make_batch([train_examples[i] for i in order[lo : lo + cfg.batch_size]])
                loss, _ = forward_loss(
                    model,
                    batch.src,
                    batch.factors if factors_enabled else None,
                    batch.tgt_in,
                    batch.tgt_out,
                    cfg.label_smoothing,
                )
                if not torch.isfinite(loss):
                    raise NonFiniteLoss(f"loss became non-finite at step {step} (epoch {epoch})")
                optimizer.zero_grad()
                loss.backward()
                if cfg.grad_clip > 0:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                lr = isr_learning_rate(step + 1, cfg.lr_peak, cfg.warmup_steps)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                optimizer.step()
                step += 1
                running_loss += float(loss.detach())
                running_count += 1

            if epoch % cfg.eval_every_epochs != 0 and epoch != cfg.max_epochs:
                continue
            val_loss = evaluate_loss(model, val_examples, cfg)
            accuracy = accuracy_fn(model) if accuracy_fn is not None else None
            train_loss = running_loss / max(running_count, 1)
            running_loss, running_count = 0.0, 0
            acc_text = "-" if accuracy is None else f"{accuracy:.4f}"
            log.write(f"{step}\t{train_loss:.6f}\t{val_loss:.6f}\t{acc_text}\n")
            log.flush()
            history.append({"step": step, "loss": train_loss, "val_loss": val_loss, "val_accuracy": accuracy})
            if math.isnan(val_loss):
                continue  # no validation set: no early stopping, best = last
            # early stopping always follows validation loss; the retained
            # checkpoint may instead track accuracy, which keeps improving
            # after the smoothed loss flattens
            if cfg.selection == "val_accuracy" and accuracy is not None:
                metric = -accuracy
            else:
                metric = val_loss
            if metric < best_metric:
                best_metric = metric
                save_checkpoint(model, best_path, step=step)
            if val_loss < best_val:
                best_val = val_loss
                evals_since_best = 0
            else:
                evals_since_best += 1
                if evals_since_best >= cfg.patience:
                    stop = True
            if stop:
                break
    save_checkpoint(model, last_path, step=step)
    if not best_path.exists():
        save_checkpoint(model, best_path, step=step)
    return TrainResult(
        best_path=best_path,
        last_path=last_path,
        log_path=log_path,
        best_val_loss=best_val,
        steps=step,
        history=history,
    )


@torch.no_grad()
def evaluate_loss(model: UnitTransformer, examples: Sequence[EncodedExample], cfg: TrainConfig) -> float:
    """Mean label-smoothed loss over a dataset (token-weighted)."""
    if not examples:
        return math.nan
    was_training = model.training
    model.eval()
    factors_enabled = model.cfg.factor_embedding_size > 0
    total, tokens = 0.0, 0
    for lo in range(0, len(examples), cfg.batch_size):
        batch = make_batch(examples[lo : lo + cfg.batch_size])
        loss, _ = forward_loss(
            model,
            batch.src,
            batch.factors if factors_enabled else None,
            batch.tgt_in,
            batch.tgt_out,
            cfg.label_smoothing,
        )
        n = int((batch.tgt_out != PAD_ID).sum())
        total += float(loss) * n
        tokens += n
    if was_training:
        model.train()
    return total / tokens
