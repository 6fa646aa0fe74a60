"""Encoder specifications and named presets.

An :class:`EncoderSpec` is a declarative description of a tower; building the
actual network happens in :mod:`clip_lab.model_zoo.factory`. Parameter counts
can be predicted analytically from a spec alone, which the tests use as an
independent oracle against the built networks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from clip_lab.errors import ConfigurationError

FAMILIES = ("vit", "cnn_resnet_style", "mlp_mixer")

# Stage block counts for the ResNet-style CNN, keyed by nominal depth
# (depth counts conv layers the way ResNet names do: 3*blocks + stem + head).
_RESNET_STAGES = {
    50: (3, 4, 6, 3),
    26: (2, 2, 2, 2),
    14: (1, 1, 1, 1),
}


@dataclass(frozen=True)
class EncoderSpec:
    """Declarative description of a vision or text encoder tower.

    ``patch_size`` applies to vit/mlp_mixer, ``heads`` to vit only.  For the
    CNN family ``width`` is the stem channel count and ``depth`` selects the
    stage layout (50 -> the ResNet-50 block pattern).
    """

    family: str
    depth: int
    width: int
    patch_size: int | None = None
    heads: int | None = None
    input_resolution: int = 224

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unsupported encoder family {self.family!r}; expected one of {FAMILIES}"
            )
        if self.depth < 1 or self.width < 1:
            raise ConfigurationError("depth and width must be positive")
        if self.family == "vit":
            if self.heads is None or self.heads < 1:
                raise ConfigurationError("vit requires a positive head count")
            if self.width % self.heads != 0:
                raise ConfigurationError(
                    f"width {self.width} not divisible by heads {self.heads}"
                )
        if self.family in ("vit", "mlp_mixer"):
            if self.patch_size is None or self.patch_size < 1:
                raise ConfigurationError(f"{self.family} requires a positive patch_size")
            if self.input_resolution % self.patch_size != 0:
                raise ConfigurationError(
                    f"input_resolution {self.input_resolution} not divisible by "
                    f"patch_size {self.patch_size}"
                )
        if self.family == "cnn_resnet_style" and self.depth not in _RESNET_STAGES:
            raise ConfigurationError(
                f"cnn_resnet_style depth must be one of {sorted(_RESNET_STAGES)}, "
                f"got {self.depth}"
            )

    @property
    def grid_size(self) -> int:
        """Patch grid side length (vit / mixer)."""
        if self.patch_size is None:
            raise ConfigurationError(f"{self.family} has no patch grid")
        return self.input_resolution // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid_size ** 2

    def with_resolution(self, resolution: int) -> "EncoderSpec":
        return replace(self, input_resolution=resolution)


# Canonical presets from the ViT/Mixer/ResNet literature plus desk-scale ones
# small enough for the test suite to train in seconds.
VISION_PRESETS: dict[str, EncoderSpec] = {
    "vit_ti16": EncoderSpec("vit", depth=12, width=192, patch_size=16, heads=3),
    "vit_s16": EncoderSpec("vit", depth=12, width=384, patch_size=16, heads=6),
    "vit_b32": EncoderSpec("vit", depth=12, width=768, patch_size=32, heads=12),
    "vit_b16": EncoderSpec("vit", depth=12, width=768, patch_size=16, heads=12),
    "vit_l16": EncoderSpec("vit", depth=24, width=1024, patch_size=16, heads=16),
    "mixer_b32": EncoderSpec("mlp_mixer", depth=12, width=768, patch_size=32),
    "resnet50": EncoderSpec("cnn_resnet_style", depth=50, width=64),
    # Desk-scale towers.
    "vit_nano": EncoderSpec("vit", depth=2, width=64, patch_size=8, heads=2,
                            input_resolution=64),
    "vit_micro": EncoderSpec("vit", depth=2, width=64, patch_size=8, heads=2,
                             input_resolution=32),
    "mixer_nano": EncoderSpec("mlp_mixer", depth=2, width=64, patch_size=8,
                              input_resolution=64),
    "cnn_nano": EncoderSpec("cnn_resnet_style", depth=14, width=16,
                            input_resolution=64),
}

TEXT_PRESETS: dict[str, EncoderSpec] = {
    # The paper-scale text tower is a ViT-Base-sized transformer.
    "text_b": EncoderSpec("vit", depth=12, width=768, patch_size=16, heads=12),
    "text_nano": EncoderSpec("vit", depth=2, width=64, patch_size=8, heads=2),
}

# Published parameter counts (backbone + classification head, as reported by
# the reference implementations) that our towers must stay within 5% of.
CANONICAL_PARAM_COUNTS = {
    "vit_ti16": 5.7e6,
    "vit_s16": 22.1e6,
    "vit_b32": 88.2e6,
    "vit_b16": 86.6e6,
    "vit_l16": 304.3e6,
    "mixer_b32": 60.3e6,
    "resnet50": 25.6e6,
}


def get_vision_preset(name: str) -> EncoderSpec:
    try:
        return VISION_PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown vision preset {name!r}; known: {sorted(VISION_PRESETS)}"
        ) from None


def get_text_preset(name: str) -> EncoderSpec:
    try:
        return TEXT_PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown text preset {name!r}; known: {sorted(TEXT_PRESETS)}"
        ) from None


def mlp_hidden_dim(width: int) -> int:
    return 4 * width


def mixer_token_hidden_dim(width: int) -> int:
    return width // 2


def count_vision_params(spec: EncoderSpec, projection_dim: int) -> int:
    """Analytic parameter count of a vision tower, projection included."""
    if spec.family == "vit":
        return _count_vit_params(spec, projection_dim, token_embed=False)
    if spec.family == "mlp_mixer":
        return _count_mixer_params(spec, projection_dim)
    if spec.family == "cnn_resnet_style":
        return _count_resnet_params(spec, projection_dim)
    raise ConfigurationError(f"unsupported family {spec.family!r}")


def count_text_params(spec: EncoderSpec, projection_dim: int, vocab_size: int,
                      context_length: int) -> int:
    """Analytic parameter count of the text transformer, projection included."""
    d = spec.width
    total = vocab_size * d          # token embedding
    total += context_length * d     # positional embedding
    total += _transformer_block_params(d) * spec.depth
    total += 2 * d                  # final layer norm
    total += d * projection_dim     # projection (no bias)
    return total


def _transformer_block_params(d: int) -> int:
    h = mlp_hidden_dim(d)
    attn = (d * 3 * d + 3 * d) + (d * d + d)    # qkv + output proj
    mlp = (d * h + h) + (h * d + d)
    norms = 2 * (2 * d)
    return attn + mlp + norms


def _count_vit_params(spec: EncoderSpec, projection_dim: int, token_embed: bool) -> int:
    d = spec.width
    total = 0
    if not token_embed:
        patch_dim = 3 * spec.patch_size ** 2
        total += patch_dim * d + d              # patch embedding conv
        total += spec.num_patches * d           # positional embedding
    total += _transformer_block_params(d) * spec.depth
    total += 2 * d                              # final layer norm
    total += d * projection_dim
    return total


def _count_mixer_params(spec: EncoderSpec, projection_dim: int) -> int:
    d = spec.width
    tokens = spec.num_patches
    token_h = mixer_token_hidden_dim(d)
    channel_h = mlp_hidden_dim(d)
    patch_dim = 3 * spec.patch_size ** 2
    total = patch_dim * d + d
    per_block = (
        (tokens * token_h + token_h) + (token_h * tokens + tokens)
        + (d * channel_h + channel_h) + (channel_h * d + d)
        + 2 * (2 * d)
    )
    total += per_block * spec.depth
    total += 2 * d
    total += d * projection_dim
    return total


def _count_resnet_params(spec: EncoderSpec, projection_dim: int) -> int:
    # Convolutions are bias-free (each is followed by a BatchNorm with
    # weight + bias), matching the reference ResNet definition.
    stages = _RESNET_STAGES[spec.depth]
    base = spec.width
    total = 3 * base * 49 + 2 * base            # 7x7 stem conv + BN
    in_ch = base
    for stage_idx, blocks in enumerate(stages):
        mid = base * (2 ** stage_idx)
        out_ch = mid * 4
        for block_idx in range(blocks):
            total += in_ch * mid + 2 * mid              # 1x1 reduce + BN
            total += mid * mid * 9 + 2 * mid            # 3x3 + BN
            total += mid * out_ch + 2 * out_ch          # 1x1 expand + BN
            if block_idx == 0:
                total += in_ch * out_ch + 2 * out_ch    # downsample path
            in_ch = out_ch
    total += in_ch * projection_dim
    return total
