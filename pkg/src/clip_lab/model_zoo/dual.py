"""Paired encoders sharing a joint embedding space with a learnable logit scale."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import torch
import torch.nn as nn

from clip_lab.errors import ConfigurationError, NumericError
from clip_lab.model_zoo.cnn import ResNet
from clip_lab.model_zoo.mixer import MlpMixer
from clip_lab.model_zoo.specs import EncoderSpec
from clip_lab.model_zoo.text import TextTransformer
from clip_lab.model_zoo.vit import VisionTransformer

log = logging.getLogger(__name__)

# Temperature convention from the CLIP lineage: init exp(scale) = 1/0.07,
# clamp exp(scale) <= 100.
LOGIT_SCALE_INIT = math.log(1.0 / 0.07)
LOGIT_SCALE_MAX = 100.0


def build_encoder(spec: EncoderSpec, projection_dim: int, *, modality: str = "vision",
                  vocab_size: int | None = None,
                  context_length: int = 16) -> nn.Module:
    """Instantiate one tower from its spec and report its parameter count."""
    if projection_dim < 1:
        raise ConfigurationError("projection_dim must be positive")
    if modality == "text":
        if vocab_size is None:
            raise ConfigurationError("text encoders need a vocab_size")
        if spec.family != "vit":
            raise ConfigurationError(
                f"text towers are transformers; family {spec.family!r} unsupported"
            )
        net: nn.Module = TextTransformer(spec, projection_dim, vocab_size,
                                         context_length)
    elif modality == "vision":
        if spec.family == "vit":
            net = VisionTransformer(spec, projection_dim)
        elif spec.family == "mlp_mixer":
            net = MlpMixer(spec, projection_dim)
        elif spec.family == "cnn_resnet_style":
            net = ResNet(spec, projection_dim)
        else:
            raise ConfigurationError(f"unsupported encoder family {spec.family!r}")
    else:
        raise ConfigurationError(f"unknown modality {modality!r}")
    log.info("built %s %s encoder: %d parameters", spec.family, modality,
             param_count(net))
    return net


def param_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


class DualEncoder(nn.Module):
    """Vision tower + text tower projecting into a shared space."""

    def __init__(self, vision_spec: EncoderSpec, text_spec: EncoderSpec,
                 projection_dim: int = 512, vocab_size: int = 512,
                 context_length: int = 16):
        super().__init__()
        self.vision_spec = vision_spec
        self.text_spec = text_spec
        self.projection_dim = projection_dim
        self.vocab_size = vocab_size
        self.context_length = context_length
        self.visual = build_encoder(vision_spec, projection_dim, modality="vision")
        self.textual = build_encoder(text_spec, projection_dim, modality="text",
                                     vocab_size=vocab_size,
                                     context_length=context_length)
        self.logit_scale = nn.Parameter(torch.tensor(LOGIT_SCALE_INIT))

    @property
    def logit_scale_value(self) -> float:
        return float(self.logit_scale.exp().clamp(max=LOGIT_SCALE_MAX))

    def scale_tensor(self) -> torch.Tensor:
        """exp(logit_scale) clamped into (0, 100], kept differentiable."""
        return self.logit_scale.exp().clamp(max=LOGIT_SCALE_MAX)

    def clamp_logit_scale(self) -> None:
        with torch.no_grad():
            self.logit_scale.clamp_(max=math.log(LOGIT_SCALE_MAX))

    def encode_image(self, images: torch.Tensor,
                     keep_indices: torch.Tensor | None = None) -> torch.Tensor:
        if isinstance(self.visual, VisionTransformer):
            return self.visual(images, keep_indices=keep_indices)
        if keep_indices is not None:
            raise ConfigurationError(
                f"patch masking requires a vit vision tower, not "
                f"{self.vision_spec.family}"
            )
        return self.visual(images)

    def encode_text(self, token_ids: torch.Tensor) -> torch.Tensor:
        return self.textual(token_ids)

    def embed_batch(self, images: torch.Tensor, token_ids: torch.Tensor,
                    keep_indices: torch.Tensor | None = None) -> "EmbeddingBatch":
        return EmbeddingBatch(
            image_embeddings=self.encode_image(images, keep_indices=keep_indices),
            text_embeddings=self.encode_text(token_ids),
            logit_scale_value=self.scale_tensor(),
        )


@dataclass
class EmbeddingBatch:
    """Joint-space vectors for a batch, before L2 normalization."""

    image_embeddings: torch.Tensor
    text_embeddings: torch.Tensor
    logit_scale_value: torch.Tensor | float


def l2_normalize(x: torch.Tensor, *, what: str) -> torch.Tensor:
    norms = x.norm(dim=-1, keepdim=True)
    if bool((norms == 0).any()):
        row = int((norms.squeeze(-1) == 0).nonzero()[0])
        raise NumericError(f"zero-norm {what} row {row} cannot be normalized")
    return x / norms


def similarity_logits(batch: EmbeddingBatch) -> torch.Tensor:
    """N x N matrix of scaled image->text cosine similarities.

    logits[i][j] = logit_scale_value * cos(image_i, text_j); the text->image
    direction is the transpose.
    """
    img = l2_normalize(batch.image_embeddings, what="image embedding")
    txt = l2_normalize(batch.text_embeddings, what="text embedding")
    return batch.logit_scale_value * (img @ txt.transpose(0, 1))
