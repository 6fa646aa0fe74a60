"""MLP-Mixer vision tower."""

from __future__ import annotations

import torch
import torch.nn as nn

from clip_lab.errors import ShapeError
from clip_lab.model_zoo.layers import Mlp, init_transformer_weights
from clip_lab.model_zoo.specs import (
    EncoderSpec,
    mixer_token_hidden_dim,
    mlp_hidden_dim,
)


class MixerBlock(nn.Module):
    def __init__(self, dim: int, tokens: int, token_hidden: int, channel_hidden: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.token_mlp = Mlp(tokens, token_hidden)
        self.norm2 = nn.LayerNorm(dim)
        self.channel_mlp = Mlp(dim, channel_hidden)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.norm1(x).transpose(1, 2)       # mix across tokens
        y = self.token_mlp(y).transpose(1, 2)
        x = x + y
        return x + self.channel_mlp(self.norm2(x))


class MlpMixer(nn.Module):
    def __init__(self, spec: EncoderSpec, projection_dim: int):
        super().__init__()
        self.spec = spec
        self.projection_dim = projection_dim
        tokens = spec.num_patches
        self.patch_embed = nn.Conv2d(3, spec.width, kernel_size=spec.patch_size,
                                     stride=spec.patch_size)
        self.blocks = nn.ModuleList(
            MixerBlock(spec.width, tokens, mixer_token_hidden_dim(spec.width),
                       mlp_hidden_dim(spec.width))
            for _ in range(spec.depth)
        )
        self.norm = nn.LayerNorm(spec.width)
        self.proj = nn.Linear(spec.width, projection_dim, bias=False)
        self.apply(init_transformer_weights)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        res = self.spec.input_resolution
        if images.ndim != 4 or images.shape[1] != 3 or images.shape[2] != res \
                or images.shape[3] != res:
            raise ShapeError(
                f"expected images of shape (N, 3, {res}, {res}), got {tuple(images.shape)}"
            )
        x = self.patch_embed(images).flatten(2).transpose(1, 2)
        for block in self.blocks:
            x = block(x)
        x = self.norm(x)
        return self.proj(x.mean(dim=1))
