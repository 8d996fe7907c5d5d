"""Tiny transformer encoder with inspectable internals.

Small enough that every check in the suite runs on a CPU in seconds,
but structurally a standard pre-LN transformer: token + position
embeddings, self-attention blocks that expose their per-head attention
matrices, mean pooling over the last hidden states, and a linear
prediction head. There is deliberately no LayerNorm after the last
block: the hidden states of a k-layer student initialized from the
bottom k teacher layers must equal the teacher's layer-k hidden states
exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import torch
from torch import Tensor, nn


@dataclass(frozen=True)
class EncoderConfig:
    num_layers: int = 4
    hidden: int = 32
    heads: int = 4
    vocab_size: int = 512
    max_len: int = 32
    ffn: int = 64
    logit_dim: int = 2

    def __post_init__(self) -> None:
        if self.hidden % self.heads != 0:
            raise ValueError("hidden size must divide evenly across heads")


@dataclass
class EncoderOutput:
    logits: Tensor  # (B, logit_dim)
    hidden: Tensor  # (B, l, d) last-layer hidden states
    attentions: Tensor  # (B, h, l, l) last-layer per-head attention
    pooled: Tensor  # (B, d)
    layer_hidden: tuple[Tensor, ...] = ()  # per-layer states when requested


def mean_pool(hidden: Tensor, mask: Tensor) -> Tensor:
    """Mean of the hidden-state rows selected by a 0/1 mask.

    Accepts (l, d) with (l,) or batched (B, l, d) with (B, l); the mask
    must select at least one row per sequence.
    """
    squeeze = hidden.dim() == 2
    if squeeze:
        hidden = hidden.unsqueeze(0)
        mask = mask.unsqueeze(0)
    counts = mask.sum(dim=1)
    if (counts == 0).any():
        raise ValueError("mask must select at least one position per sequence")
    weights = mask.to(hidden.dtype).unsqueeze(-1)
    pooled = (hidden * weights).sum(dim=1) / counts.to(hidden.dtype).unsqueeze(-1)
    return pooled.squeeze(0) if squeeze else pooled


class SelfAttention(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.heads = config.heads
        self.head_dim = config.hidden // config.heads
        self.qkv = nn.Linear(config.hidden, 3 * config.hidden)
        self.proj = nn.Linear(config.hidden, config.hidden)

    def forward(self, x: Tensor, mask: Tensor) -> tuple[Tensor, Tensor]:
        batch, length, hidden = x.shape
        qkv = self.qkv(x).reshape(batch, length, 3, self.heads, self.head_dim)
        q, k, v = (qkv[:, :, i].transpose(1, 2) for i in range(3))  # (B, h, l, dh)
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        key_mask = mask[:, None, None, :] == 0
        scores = scores.masked_fill(key_mask, torch.finfo(scores.dtype).min)
        attention = torch.softmax(scores, dim=-1)  # (B, h, l, l)
        out = (attention @ v).transpose(1, 2).reshape(batch, length, hidden)
        return self.proj(out), attention


class EncoderBlock(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.ln_attn = nn.LayerNorm(config.hidden)
        self.attn = SelfAttention(config)
        self.ln_mlp = nn.LayerNorm(config.hidden)
        self.mlp = nn.Sequential(
            nn.Linear(config.hidden, config.ffn),
            nn.GELU(),
            nn.Linear(config.ffn, config.hidden),
        )

    def forward(self, x: Tensor, mask: Tensor) -> tuple[Tensor, Tensor]:
        attended, attention = self.attn(self.ln_attn(x), mask)
        x = x + attended
        x = x + self.mlp(self.ln_mlp(x))
        return x, attention


class TinyEncoder(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(config.vocab_size, config.hidden)
        self.position_embedding = nn.Embedding(config.max_len, config.hidden)
        self.blocks = nn.ModuleList(EncoderBlock(config) for _ in range(config.num_layers))
        self.head = nn.Linear(config.hidden, config.logit_dim)

    def forward(
        self,
        tokens: Tensor,
        mask: Tensor,
        collect_layers: bool = False,
    ) -> EncoderOutput:
        if tokens.shape[1] > self.config.max_len:
            raise ValueError(f"sequence length {tokens.shape[1]} > max_len {self.config.max_len}")
        positions = torch.arange(tokens.shape[1], device=tokens.device)
        x = self.token_embedding(tokens) + self.position_embedding(positions)[None, :, :]
        layer_hidden = []
        attention = None
        for block in self.blocks:
            x, attention = block(x, mask)
            if collect_layers:
                layer_hidden.append(x)
        pooled = mean_pool(x, mask)
        return EncoderOutput(
            logits=self.head(pooled),
            hidden=x,
            attentions=attention,
            pooled=pooled,
            layer_hidden=tuple(layer_hidden),
        )

    def embed_text(self, tokens: Tensor, mask: Tensor) -> Tensor:
        """Pooled sequence embedding (the retrieval-side representation)."""
        return self.forward(tokens, mask).pooled


def init_student(teacher: TinyEncoder, k: int = 3) -> TinyEncoder:
    """Student with the teacher's bottom k layers, embeddings, and head.

    Parameters are bit-copies, so before any update the student's
    last-layer hidden states equal the teacher's layer-k hidden states
    on any input.
    """
    layers = teacher.config.num_layers
    if not 1 <= k < layers:
        raise ValueError(f"k must satisfy 1 <= k < {layers}, got {k}")
    student = TinyEncoder(replace(teacher.config, num_layers=k))
    teacher_state = teacher.state_dict()
    student.load_state_dict(
        {name: teacher_state[name].clone() for name in student.state_dict()}
    )
    return student
