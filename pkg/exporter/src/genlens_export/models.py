"""Torch builds of the four supported generator architectures.

Each generator maps a latent vector through a dense layer, a reshape to a
(channels, side, side) block, and a chain of 5x5 stride-2 transposed
convolutions that double the spatial side per stage, with batch norm and
ReLU between stages and tanh on the image.  Module names (fc, bn0, up1,
bn1, ...) follow the manifest naming convention of the consuming engine, so
every parameter has one well-defined slot in an exported model.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ArchSpec:
    latent_count: int
    distribution: str
    interval: tuple[float, float]
    base_channels: int
    base_side: int
    stage_channels: tuple[int, ...]  # output channels of each deconv stage

    @property
    def n_stages(self) -> int:
        return len(self.stage_channels)

    @property
    def image_side(self) -> int:
        return self.base_side * 2 ** self.n_stages


ARCHITECTURES: dict[str, ArchSpec] = {
    "vae_celeba": ArchSpec(128, "truncated_normal", (-3.0, 3.0), 64, 4, (64, 32, 16, 3)),
    "gan_celeba": ArchSpec(150, "uniform", (-1.0, 1.0), 128, 2, (64, 32, 16, 3)),
    "vae_cifar": ArchSpec(128, "truncated_normal", (-3.0, 3.0), 64, 2, (32, 16, 3)),
    "gan_cifar": ArchSpec(150, "uniform", (-1.0, 1.0), 64, 2, (32, 16, 3)),
}


class Generator(nn.Module):
    """Upsampling generator; forward expects (batch, latent_count) float32."""

    def __init__(self, spec: ArchSpec):
        super().__init__()
        self.spec = spec
        c0, s0 = spec.base_channels, spec.base_side
        self.fc = nn.Linear(spec.latent_count, c0 * s0 * s0)
        self.bn0 = nn.BatchNorm2d(c0, eps=1e-5)
        prev = c0
        for i, cout in enumerate(spec.stage_channels, start=1):
            setattr(self, f"up{i}", nn.ConvTranspose2d(
                prev, cout, kernel_size=5, stride=2, padding=2, output_padding=1, bias=False,
            ))
            if i < spec.n_stages:
                setattr(self, f"bn{i}", nn.BatchNorm2d(cout, eps=1e-5))
            prev = cout

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        c0, s0 = self.spec.base_channels, self.spec.base_side
        x = self.fc(z).view(-1, c0, s0, s0)
        x = torch.relu(self.bn0(x))
        for i in range(1, self.spec.n_stages + 1):
            x = getattr(self, f"up{i}")(x)
            if i < self.spec.n_stages:
                x = torch.relu(getattr(self, f"bn{i}")(x))
        return torch.tanh(x)


def init_weights(model: Generator, seed: int) -> Generator:
    """Scaled-normal initialization: weights N(0, 0.02), batch-norm gain
    N(1, 0.02), every bias and running mean zero, running variance one."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        model.fc.weight.normal_(0.0, 0.02, generator=gen)
        model.fc.bias.zero_()
        for name, module in model.named_modules():
            if isinstance(module, nn.ConvTranspose2d):
                module.weight.normal_(0.0, 0.02, generator=gen)
            elif isinstance(module, nn.BatchNorm2d):
                module.weight.normal_(1.0, 0.02, generator=gen)
                module.bias.zero_()
                module.running_mean.zero_()
                module.running_var.fill_(1.0)
                module.num_batches_tracked.zero_()
    return model


def build_model(arch: str, init_seed: int | None = None) -> Generator:
    """Construct a generator for a supported architecture key; with
    init_seed, apply the scaled-normal initialization deterministically."""
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}; choose from {sorted(ARCHITECTURES)}")
    model = Generator(ARCHITECTURES[arch])
    if init_seed is not None:
        init_weights(model, init_seed)
    return model.eval()
