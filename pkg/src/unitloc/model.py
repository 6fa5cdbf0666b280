"""Encoder-decoder transformer with optional concatenated source factors.

Pre-norm arrangement throughout: each sublayer normalizes its input and adds
dropout + residual on its output, with a final normalization after each
stack. Source factors, when enabled, are embedded at width ``f`` and
concatenated to token embeddings of width ``d - f`` so the model width stays
``d``; disabling factors (f = 0) reproduces the plain model.

Built on torch tensors and autograd; the architecture, masking, loss, and
decoding are defined here, not borrowed from ``torch.nn`` composites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import torch
from torch import Tensor, nn

PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3


class InvalidConfig(Exception):
    pass


class ShapeMismatch(Exception):
    pass


@dataclass
class ModelConfig:
    """Transformer shape. Defaults are the desk-scale configuration; the
    full-scale reference uses 4 encoder / 2 decoder layers at model size 512
    with feed-forward 2048 and 8 heads."""

    src_vocab_size: int
    tgt_vocab_size: int
    encoder_layers: int = 2
    decoder_layers: int = 1
    model_size: int = 128
    attention_heads: int = 4
    feed_forward_hidden: int = 512
    dropout_act: float = 0.1
    dropout_attention: float = 0.1
    dropout_prepost: float = 0.1
    max_seq_len: int = 101
    factor_embedding_size: int = 0  # 0 disables source factors
    factor_vocab_size: int = 4  # pad + the three tags

    def validate(self) -> None:
        if self.model_size % 2 != 0:
            raise InvalidConfig("model size must be even (sinusoidal position pairs)")
        if self.model_size % self.attention_heads != 0:
            raise InvalidConfig(f"model size {self.model_size} not divisible by {self.attention_heads} heads")
        if not 0 <= self.factor_embedding_size < self.model_size:
            raise InvalidConfig("factor embedding must be smaller than the model size")
        if min(self.src_vocab_size, self.tgt_vocab_size) < len((PAD_ID, UNK_ID, BOS_ID, EOS_ID)):
            raise InvalidConfig("vocabulary too small for the reserved special tokens")
        if self.encoder_layers < 1 or self.decoder_layers < 1:
            raise InvalidConfig("at least one encoder and one decoder layer required")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        return cls(**doc)


def sinusoidal_positions(max_len: int, size: int) -> Tensor:
    """Fixed sinusoidal position table (max_len, size)."""
    position = torch.arange(max_len, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, size, 2, dtype=torch.float32) * (-math.log(10000.0) / size))
    table = torch.zeros(max_len, size)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table


class MultiHeadAttention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d, h = cfg.model_size, cfg.attention_heads
        self.heads = h
        self.head_dim = d // h
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.out = nn.Linear(d, d)
        self.dropout = nn.Dropout(cfg.dropout_attention)
        self.last_weights: Optional[Tensor] = None
        self.capture_weights = False

    def forward(self, query: Tensor, keys: Tensor, mask: Optional[Tensor]) -> Tensor:
        b, t_q, d = query.shape
        t_k = keys.shape[1]
        q = self.q(query).view(b, t_q, self.heads, self.head_dim).transpose(1, 2)
        k = self.k(keys).view(b, t_k, self.heads, self.head_dim).transpose(1, 2)
        v = self.v(keys).view(b, t_k, self.heads, self.head_dim).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        if mask is not None:
            scores = scores.masked_fill(~mask, torch.finfo(scores.dtype).min)
        weights = torch.softmax(scores, dim=-1)
        if self.capture_weights:
            self.last_weights = weights.detach()
        weights = self.dropout(weights)
        merged = (weights @ v).transpose(1, 2).reshape(b, t_q, d)
        return self.out(merged)


class FeedForward(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.inner = nn.Linear(cfg.model_size, cfg.feed_forward_hidden)
        self.outer = nn.Linear(cfg.feed_forward_hidden, cfg.model_size)
        self.dropout = nn.Dropout(cfg.dropout_act)

    def forward(self, x: Tensor) -> Tensor:
        return self.outer(self.dropout(torch.relu(self.inner(x))))


class PreNorm(nn.Module):
    """norm on the sublayer input, dropout + residual on its output."""

    def __init__(self, size: int, dropout: float):
        super().__init__()
        self.norm = nn.LayerNorm(size)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: Tensor, sublayer) -> Tensor:
        return x + self.dropout(sublayer(self.norm(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.attention = MultiHeadAttention(cfg)
        self.ff = FeedForward(cfg)
        self.pre_attn = PreNorm(cfg.model_size, cfg.dropout_prepost)
        self.pre_ff = PreNorm(cfg.model_size, cfg.dropout_prepost)

    def forward(self, x: Tensor, mask: Tensor) -> Tensor:
        x = self.pre_attn(x, lambda y: self.attention(y, y, mask))
        return self.pre_ff(x, self.ff)


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.self_attention = MultiHeadAttention(cfg)
        self.cross_attention = MultiHeadAttention(cfg)
        self.ff = FeedForward(cfg)
        self.pre_self = PreNorm(cfg.model_size, cfg.dropout_prepost)
        self.pre_cross = PreNorm(cfg.model_size, cfg.dropout_prepost)
        self.pre_ff = PreNorm(cfg.model_size, cfg.dropout_prepost)

    def forward(self, x: Tensor, memory: Tensor, self_mask: Tensor, cross_mask: Tensor) -> Tensor:
        x = self.pre_self(x, lambda y: self.self_attention(y, y, self_mask))
        x = self.pre_cross(x, lambda y: self.cross_attention(y, memory, cross_mask))
        return self.pre_ff(x, self.ff)


class UnitTransformer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        d, f = cfg.model_size, cfg.factor_embedding_size
        self.src_embedding = nn.Embedding(cfg.src_vocab_size, d - f, padding_idx=PAD_ID)
        self.factor_embedding = nn.Embedding(cfg.factor_vocab_size, f, padding_idx=PAD_ID) if f > 0 else None
        self.tgt_embedding = nn.Embedding(cfg.tgt_vocab_size, d, padding_idx=PAD_ID)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_seq_len, d))
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.encoder_layers))
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.decoder_layers))
        self.encoder_norm = nn.LayerNorm(d)
        self.decoder_norm = nn.LayerNorm(d)
        self.output = nn.Linear(d, cfg.tgt_vocab_size)

    def _embed_source(self, src: Tensor, factors: Optional[Tensor]) -> Tensor:
        if self.factor_embedding is not None:
            if factors is None:
                raise ShapeMismatch("factor stream required when factor embeddings are enabled")
            if factors.shape != src.shape:
                raise ShapeMismatch(f"factors {tuple(factors.shape)} do not align with source {tuple(src.shape)}")
            embedded = torch.cat([self.src_embedding(src), self.factor_embedding(factors)], dim=-1)
        else:
            embedded = self.src_embedding(src)
        d = self.cfg.model_size
        return embedded * math.sqrt(d) + self.positions[: src.shape[1]]

    def _embed_target(self, tgt: Tensor) -> Tensor:
        return self.tgt_embedding(tgt) * math.sqrt(self.cfg.model_size) + self.positions[: tgt.shape[1]]

    def encode(self, src: Tensor, factors: Optional[Tensor]) -> tuple[Tensor, Tensor]:
        if src.shape[1] > self.cfg.max_seq_len:
            raise ShapeMismatch(f"source length {src.shape[1]} exceeds max_seq_len {self.cfg.max_seq_len}")
        pad_mask = (src != PAD_ID).view(src.shape[0], 1, 1, src.shape[1])
        x = self._embed_source(src, factors)
        for layer in self.encoder:
            x = layer(x, pad_mask)
        return self.encoder_norm(x), pad_mask

    def decode(self, memory: Tensor, src_pad_mask: Tensor, tgt_in: Tensor) -> Tensor:
        if tgt_in.shape[1] > self.cfg.max_seq_len:
            raise ShapeMismatch(f"target length {tgt_in.shape[1]} exceeds max_seq_len {self.cfg.max_seq_len}")
        t = tgt_in.shape[1]
        causal = torch.tril(torch.ones(t, t, dtype=torch.bool, device=tgt_in.device)).view(1, 1, t, t)
        tgt_pad = (tgt_in != PAD_ID).view(tgt_in.shape[0], 1, 1, t)
        self_mask = causal & tgt_pad
        x = self._embed_target(tgt_in)
        for layer in self.decoder:
            x = layer(x, memory, self_mask, src_pad_mask)
        return self.output(self.decoder_norm(x))

    def forward(self, src: Tensor, factors: Optional[Tensor], tgt_in: Tensor) -> Tensor:
        memory, src_pad_mask = self.encode(src, factors)
        return self.decode(memory, src_pad_mask, tgt_in)

    def set_capture_attention(self, on: bool) -> None:
        for module in self.modules():
            if isinstance(module, MultiHeadAttention):
                module.capture_weights = on

    def attention_weights(self) -> list[Tensor]:
        return [
            m.last_weights
            for m in self.modules()
            if isinstance(m, MultiHeadAttention) and m.last_weights is not None
        ]


def build_model(cfg: ModelConfig, seed: int) -> UnitTransformer:
    """Deterministic model construction: scaled-uniform fan-based init."""
    cfg.validate()
    torch.manual_seed(seed)
    model = UnitTransformer(cfg)
    for name, parameter in model.named_parameters():
        if parameter.dim() >= 2:
            nn.init.xavier_uniform_(parameter)
        elif name.endswith("bias"):
            nn.init.zeros_(parameter)
    with torch.no_grad():
        for embedding in (model.src_embedding, model.factor_embedding, model.tgt_embedding):
            if embedding is not None:
                embedding.weight[PAD_ID].zero_()
    return model


def label_smoothed_loss(
    logits: Tensor, targets: Tensor, epsilon: float
) -> tuple[Tensor, Tensor]:
    """Label-smoothed cross-entropy averaged over non-pad target tokens.

    The smoothed target puts 1 - epsilon on the gold class and spreads
    epsilon over the remaining V - 1 classes. Returns (loss, log-probs).
    """
    if logits.shape[:-1] != targets.shape:
        raise ShapeMismatch(f"logits {tuple(logits.shape)} do not align with targets {tuple(targets.shape)}")
    vocab = logits.shape[-1]
    logprobs = torch.log_softmax(logits, dim=-1)
    nll = -logprobs.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    smooth = -logprobs.sum(dim=-1)
    off_weight = epsilon / (vocab - 1)
    per_token = (1.0 - epsilon - off_weight) * nll + off_weight * smooth
    valid = (targets != PAD_ID).to(per_token.dtype)
    if valid.sum() == 0:
        raise ShapeMismatch("batch has no non-pad target tokens")
    loss = (per_token * valid).sum() / valid.sum()
    return loss, logprobs


def forward_loss(
    model: UnitTransformer,
    src: Tensor,
    factors: Optional[Tensor],
    tgt_in: Tensor,
    tgt_out: Tensor,
    epsilon: float,
) -> tuple[Tensor, Tensor]:
    """Loss on a padded batch; decoder is causally masked, pads masked out."""
    logits = model(src, factors, tgt_in)
    return label_smoothed_loss(logits, tgt_out, epsilon)


@torch.no_grad()
def greedy_decode(
    model: UnitTransformer,
    src: Tensor,
    factors: Optional[Tensor],
    max_len: int | None = None,
) -> list[list[int]]:
    """Argmax decoding until eos or max_len (default: the config limit)."""
    was_training = model.training
    model.eval()
    limit = min(max_len or model.cfg.max_seq_len, model.cfg.max_seq_len)
    memory, src_pad_mask = model.encode(src, factors)
    b = src.shape[0]
    tgt = torch.full((b, 1), BOS_ID, dtype=torch.long, device=src.device)
    finished = torch.zeros(b, dtype=torch.bool, device=src.device)
    for _ in range(limit - 1):
        logits = model.decode(memory, src_pad_mask, tgt)
        next_token = logits[:, -1].argmax(dim=-1)
        next_token = torch.where(finished, torch.full_like(next_token, PAD_ID), next_token)
        tgt = torch.cat([tgt, next_token.unsqueeze(1)], dim=1)
        finished |= next_token == EOS_ID
        if bool(finished.all()):
            break
    if was_training:
        model.train()
    out: list[list[int]] = []
    for row in tgt[:, 1:].tolist():
        ids = []
        for token in row:
            if token in (EOS_ID, PAD_ID):
                break
            ids.append(token)
        out.append(ids)
    return out


def gradient_check(
    cfg: ModelConfig,
    seed: int = 0,
    n_examples: int = 2,
    src_len: int = 5,
    tgt_len: int = 4,
    eps: float = 1e-5,
) -> float:
    """Max relative deviation between autograd and central finite differences.

    Runs the micro model in double precision with dropout disabled; every
    parameter element is perturbed both ways.
    """
    model = build_model(cfg, seed).double()
    model.eval()
    gen = torch.Generator().manual_seed(seed + 1)
    src = torch.randint(4, cfg.src_vocab_size, (n_examples, src_len), generator=gen)
    tgt = torch.randint(4, cfg.tgt_vocab_size, (n_examples, tgt_len), generator=gen)
    factors = (
        torch.randint(1, cfg.factor_vocab_size, (n_examples, src_len), generator=gen)
        if cfg.factor_embedding_size > 0
        else None
    )
    tgt_in = torch.cat([torch.full((n_examples, 1), BOS_ID), tgt[:, :-1]], dim=1)

    def compute_loss() -> Tensor:
        loss, _ = forward_loss(model, src, factors, tgt_in, tgt, epsilon=0.1)
        return loss

    loss = compute_loss()
    model.zero_grad()
    loss.backward()

    worst = 0.0
    with torch.no_grad():
        for parameter in model.parameters():
            grad = parameter.grad
            flat = parameter.view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + eps
                up = compute_loss().item()
                flat[i] = original - eps
                down = compute_loss().item()
                flat[i] = original
                numeric = (up - down) / (2 * eps)
                analytic = grad.view(-1)[i].item() if grad is not None else 0.0
                scale = max(abs(numeric), abs(analytic))
                if scale < 1e-10:
                    continue
                worst = max(worst, abs(numeric - analytic) / scale)
    return worst


def parameter_count(cfg: ModelConfig) -> int:
    """Closed-form parameter tally for a config (used to cross-check builds)."""
    d, f, ff = cfg.model_size, cfg.factor_embedding_size, cfg.feed_forward_hidden
    attention = 4 * (d * d + d)
    layer_norm = 2 * d
    ffn = d * ff + ff + ff * d + d
    encoder_layer = attention + ffn + 2 * layer_norm
    decoder_layer = 2 * attention + ffn + 3 * layer_norm
    total = cfg.src_vocab_size * (d - f)
    if f > 0:
        total += cfg.factor_vocab_size * f
    total += cfg.tgt_vocab_size * d
    total += cfg.encoder_layers * encoder_layer + cfg.decoder_layers * decoder_layer
    total += 2 * layer_norm  # final encoder/decoder norms
    total += d * cfg.tgt_vocab_size + cfg.tgt_vocab_size
    return total
