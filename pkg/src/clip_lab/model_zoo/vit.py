"""Vision transformer tower with optional patch masking.

The tower has no class token: tokens are mean-pooled before projection, so
the token count seen by every layer is exactly the number of (kept) patches.
This keeps the FLOPs accounting for masked training an exact K/P rescaling
of the token-linear terms.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from clip_lab.errors import ShapeError
from clip_lab.model_zoo.layers import TransformerBlock, init_transformer_weights
from clip_lab.model_zoo.specs import EncoderSpec, mlp_hidden_dim


class VisionTransformer(nn.Module):
    def __init__(self, spec: EncoderSpec, projection_dim: int):
        super().__init__()
        self.spec = spec
        self.projection_dim = projection_dim
        self.patch_embed = nn.Conv2d(3, spec.width, kernel_size=spec.patch_size,
                                     stride=spec.patch_size)
        self.pos_embed = nn.Parameter(torch.zeros(1, spec.num_patches, spec.width))
        self.blocks = nn.ModuleList(
            TransformerBlock(spec.width, spec.heads, mlp_hidden_dim(spec.width))
            for _ in range(spec.depth)
        )
        self.norm = nn.LayerNorm(spec.width)
        self.proj = nn.Linear(spec.width, projection_dim, bias=False)
        self.apply(init_transformer_weights)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)

    def _check_input(self, images: torch.Tensor) -> None:
        res = self.spec.input_resolution
        if images.ndim != 4 or images.shape[1] != 3:
            raise ShapeError(
                f"expected images of shape (N, 3, {res}, {res}), got {tuple(images.shape)}"
            )
        if images.shape[2] != res or images.shape[3] != res:
            raise ShapeError(
                f"expected spatial resolution {res}x{res}, got "
                f"{images.shape[2]}x{images.shape[3]}"
            )

    def forward(self, images: torch.Tensor,
                keep_indices: torch.Tensor | None = None) -> torch.Tensor:
        """Embed a batch of images; ``keep_indices`` (N, K) selects the patch
        tokens that survive masking (all patches when None)."""
        self._check_input(images)
        x = self.patch_embed(images)                    # (N, C, g, g)
        x = x.flatten(2).transpose(1, 2)                # (N, P, C)
        x = x + self.pos_embed
        if keep_indices is not None:
            idx = keep_indices.unsqueeze(-1).expand(-1, -1, x.shape[-1])
            x = torch.gather(x, 1, idx)
        for block in self.blocks:
            x = block(x)
        x = self.norm(x)
        pooled = x.mean(dim=1)
        return self.proj(pooled)
