"""Text transformer tower."""

from __future__ import annotations

import torch
import torch.nn as nn

from clip_lab.errors import ShapeError, ValidationError
from clip_lab.model_zoo.layers import TransformerBlock, init_transformer_weights
from clip_lab.model_zoo.specs import EncoderSpec, mlp_hidden_dim


class TextTransformer(nn.Module):
    """Token + positional embeddings, bidirectional attention, and pooling via
    the final-position token representation."""

    def __init__(self, spec: EncoderSpec, projection_dim: int, vocab_size: int,
                 context_length: int = 16):
        super().__init__()
        self.spec = spec
        self.projection_dim = projection_dim
        self.vocab_size = vocab_size
        self.context_length = context_length
        self.token_embed = nn.Embedding(vocab_size, spec.width)
        self.pos_embed = nn.Parameter(torch.zeros(1, context_length, spec.width))
        self.blocks = nn.ModuleList(
            TransformerBlock(spec.width, spec.heads, mlp_hidden_dim(spec.width))
            for _ in range(spec.depth)
        )
        self.norm = nn.LayerNorm(spec.width)
        self.proj = nn.Linear(spec.width, projection_dim, bias=False)
        self.apply(init_transformer_weights)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)

    def _check_input(self, token_ids: torch.Tensor) -> None:
        if token_ids.ndim != 2 or token_ids.shape[1] != self.context_length:
            raise ShapeError(
                f"expected token ids of shape (N, {self.context_length}), "
                f"got {tuple(token_ids.shape)}"
            )
        bad = (token_ids < 0) | (token_ids >= self.vocab_size)
        if bool(bad.any()):
            pos = bad.nonzero()[0].tolist()
            raise ValidationError(
                f"token id {int(token_ids[pos[0], pos[1]])} at position "
                f"(row {pos[0]}, col {pos[1]}) outside vocabulary of size "
                f"{self.vocab_size}"
            )

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        self._check_input(token_ids)
        x = self.token_embed(token_ids) + self.pos_embed
        for block in self.blocks:
            x = block(x)
        x = self.norm(x)
        pooled = x[:, -1, :]
        return self.proj(pooled)
