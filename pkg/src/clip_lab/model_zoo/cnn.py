"""ResNet-style CNN vision tower (bottleneck blocks, BN, bias-free convs)."""

from __future__ import annotations

import torch
import torch.nn as nn

from clip_lab.errors import ShapeError
from clip_lab.model_zoo.specs import _RESNET_STAGES, EncoderSpec


class Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, in_ch: int, mid_ch: int, stride: int):
        super().__init__()
        out_ch = mid_ch * self.expansion
        self.conv1 = nn.Conv2d(in_ch, mid_ch, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(mid_ch)
        self.conv2 = nn.Conv2d(mid_ch, mid_ch, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(mid_ch)
        self.conv3 = nn.Conv2d(mid_ch, out_ch, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(out_ch)
        self.relu = nn.ReLU(inplace=True)
        self.downsample = None
        if stride != 1 or in_ch != out_ch:
            self.downsample = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_ch),
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        identity = x if self.downsample is None else self.downsample(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + identity)


class ResNet(nn.Module):
    def __init__(self, spec: EncoderSpec, projection_dim: int):
        super().__init__()
        self.spec = spec
        self.projection_dim = projection_dim
        base = spec.width
        stages = _RESNET_STAGES[spec.depth]
        self.stem = nn.Sequential(
            nn.Conv2d(3, base, 7, stride=2, padding=3, bias=False),
            nn.BatchNorm2d(base),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(3, stride=2, padding=1),
        )
        layers = []
        in_ch = base
        for stage_idx, blocks in enumerate(stages):
            mid = base * (2 ** stage_idx)
            for block_idx in range(blocks):
                stride = 2 if stage_idx > 0 and block_idx == 0 else 1
                layers.append(Bottleneck(in_ch, mid, stride))
                in_ch = mid * Bottleneck.expansion
        self.stages = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.proj = nn.Linear(in_ch, projection_dim, bias=False)
        self._init_weights()

    def _init_weights(self) -> None:
        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="relu")
            elif isinstance(m, nn.BatchNorm2d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)
            elif isinstance(m, nn.Linear):
                nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="linear")

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        res = self.spec.input_resolution
        if images.ndim != 4 or images.shape[1] != 3 or images.shape[2] != res \
                or images.shape[3] != res:
            raise ShapeError(
                f"expected images of shape (N, 3, {res}, {res}), got {tuple(images.shape)}"
            )
        x = self.stem(images)
        x = self.stages(x)
        x = self.pool(x).flatten(1)
        return self.proj(x)
