"""Constructors for the models shipped with the package.

Three families:

* make_seeded_generator: DCGAN-style upsampling generators at the four
  shipped sizes, with weights drawn from a seeded scaled-normal initializer
  (std 0.02), BatchNorm statistics fixed to mean 0 / var 1, and biases zero.
  Draw order is nodes in declaration order, one parameter tensor each, so a
  seed pins every byte of the model.
* the toy linear model: output channels (z1, z2, z1+z2) as 1x1 maps, with a
  two-unit middle layer.  Its influence maps have closed forms, which makes
  it the main correctness anchor.
* make_planted_generator: several independent blocks, each driven by its own
  latent coordinates and rendered into its own region of the image.  The
  block structure is returned as ground truth for clustering tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import CgmGraph, LatentSpec, Node, Var, build_graph, latent_ref
from .rng import Stream

_DECONV = {"stride": 2, "pad": 2, "output_padding": 1}  # doubles H and W with a 5x5 kernel


@dataclass(frozen=True)
class ArchSpec:
    latent_count: int
    distribution: str
    interval: tuple[float, float]
    base_channels: int
    base_side: int
    stage_channels: tuple[int, ...]  # output channels of each deconv


ARCHITECTURES: dict[str, ArchSpec] = {
    "vae_celeba": ArchSpec(128, "truncated_normal", (-3.0, 3.0), 64, 4, (64, 32, 16, 3)),
    "gan_celeba": ArchSpec(150, "uniform", (-1.0, 1.0), 128, 2, (64, 32, 16, 3)),
    "vae_cifar": ArchSpec(128, "truncated_normal", (-3.0, 3.0), 64, 2, (32, 16, 3)),
    "gan_cifar": ArchSpec(150, "uniform", (-1.0, 1.0), 64, 2, (32, 16, 3)),
}


def list_architectures() -> list[str]:
    return list(ARCHITECTURES) + ["toy_linear"]


def _intervals(count: int, interval: tuple[float, float]) -> np.ndarray:
    return np.tile(np.asarray(interval, dtype=np.float32), (count, 1))


def make_seeded_generator(arch: str, seed: int = 0) -> CgmGraph:
    """Build one of the shipped architectures with seed-determined weights."""
    if arch == "toy_linear":
        return make_toy_linear()
    if arch not in ARCHITECTURES:
        raise ValidationError(f"unknown architecture {arch!r}; choose from {list_architectures()}")
    spec = ARCHITECTURES[arch]
    stream = Stream(seed).child(f"weights:{arch}")
    weights: dict[str, np.ndarray] = {}
    nodes: list[Node] = []

    def bn_nodes(name: str, parent: str, channels: int) -> str:
        weights[f"{name}.mean"] = np.zeros(channels, np.float32)
        weights[f"{name}.var"] = np.ones(channels, np.float32)
        weights[f"{name}.gamma"] = stream.fill_normal((channels,), mean=1.0, std=0.02)
        weights[f"{name}.beta"] = np.zeros(channels, np.float32)
        nodes.append(
            Node(name, "batchnorm", [parent], {"eps": 1e-5},
                 {r: f"{name}.{r}" for r in ("mean", "var", "gamma", "beta")})
        )
        return name

    c0, s0 = spec.base_channels, spec.base_side
    weights["fc.weight"] = stream.fill_normal((c0 * s0 * s0, spec.latent_count), std=0.02)
    weights["fc.bias"] = np.zeros(c0 * s0 * s0, np.float32)
    nodes.append(
        Node("fc", "dense", [latent_ref(k) for k in range(spec.latent_count)], {},
             {"weight": "fc.weight", "bias": "fc.bias"})
    )
    nodes.append(Node("view", "reshape", ["fc"], {"shape": [c0, s0, s0]}))
    bn_nodes("bn0", "view", c0)
    nodes.append(Node("act0", "activation", ["bn0"], {"kind": "relu"}))

    prev, prev_c = "act0", c0
    layers: dict[str, list[Var]] = {"level0": [("act0", c) for c in range(c0)]}
    n_stages = len(spec.stage_channels)
    for i, cout in enumerate(spec.stage_channels, start=1):
        up = f"up{i}"
        weights[f"{up}.weight"] = stream.fill_normal((prev_c, cout, 5, 5), std=0.02)
        nodes.append(Node(up, "deconv", [prev], dict(_DECONV), {"weight": f"{up}.weight"}))
        if i < n_stages:
            bn_nodes(f"bn{i}", up, cout)
            nodes.append(Node(f"act{i}", "activation", [f"bn{i}"], {"kind": "relu"}))
            layers[f"level{i}"] = [(f"act{i}", c) for c in range(cout)]
            prev, prev_c = f"act{i}", cout
        else:
            nodes.append(Node("image", "activation", [up], {"kind": "tanh"}))
            layers["image"] = [("image", c) for c in range(cout)]

    latent = LatentSpec(_intervals(spec.latent_count, spec.interval), spec.distribution)
    return build_graph(latent, nodes, "image", weights, layers)


def make_toy_linear() -> CgmGraph:
    """The (z1, z2, z1+z2) model with its two-unit middle layer."""
    weights = {"mix.weight": np.array([[1, 0], [0, 1], [1, 1]], np.float32)}
    nodes = [
        Node("v1", "activation", [latent_ref(0)], {"kind": "identity"}),
        Node("v2", "activation", [latent_ref(1)], {"kind": "identity"}),
        Node("mix", "dense", ["v1", "v2"], {}, {"weight": "mix.weight"}),
        Node("image", "reshape", ["mix"], {"shape": [3, 1, 1]}),
    ]
    latent = LatentSpec(_intervals(2, (-1.0, 1.0)), "uniform")
    layers = {"units": [("v1", 0), ("v2", 0)], "image": [("image", c) for c in range(3)]}
    return build_graph(latent, nodes, "image", weights, layers)


@dataclass
class PlantedModel:
    """A block-structured generator plus its ground-truth module partition."""

    graph: CgmGraph
    layer: str  # name of the layer whose channels form the planted modules
    labels: np.ndarray  # block index per layer variable, in layer order
    regions: list[tuple[int, int, int, int]]  # (y0, y1, x0, x1) per block


def _band_regions(blocks: int, size: int) -> list[tuple[int, int, int, int]]:
    edges = np.linspace(0, size, blocks + 1).round().astype(int)
    return [(int(edges[b]), int(edges[b + 1]), 0, size) for b in range(blocks)]


def _quadrant_regions(size: int) -> list[tuple[int, int, int, int]]:
    h = size // 2
    return [(0, h, 0, h), (0, h, h, size), (h, size, 0, h), (h, size, h, size)]


def make_planted_generator(
    seed: int = 0,
    blocks: int = 3,
    latents_per_block: int = 4,
    channels_per_block: int = 8,
    image_size: int = 32,
    layout: str = "bands",
) -> PlantedModel:
    """Build a generator whose middle layer splits into independent blocks.

    Block b reads only its own latent coordinates, upsamples through two
    deconvs, and is masked into its own image region; the output sums the
    blocks.  Channels of different blocks therefore share no latent
    ancestors, and a block's influence is exactly zero outside its region.
    """
    if blocks < 2:
        raise ValidationError("planted generator needs at least 2 blocks")
    if image_size % 4 != 0:
        raise ValidationError("image_size must be divisible by 4 (two doubling stages)")
    if layout == "bands":
        regions = _band_regions(blocks, image_size)
    elif layout == "quadrants":
        if blocks != 4:
            raise ValidationError("quadrant layout requires exactly 4 blocks")
        regions = _quadrant_regions(image_size)
    else:
        raise ValidationError(f"unknown layout {layout!r}")

    stream = Stream(seed).child("planted")
    s0 = image_size // 4
    weights: dict[str, np.ndarray] = {}
    nodes: list[Node] = []
    mid_vars: list[Var] = []
    labels: list[int] = []
    for b in range(blocks):
        zs = [latent_ref(b * latents_per_block + j) for j in range(latents_per_block)]
        c = channels_per_block
        weights[f"b{b}_fc.weight"] = stream.fill_normal((c * s0 * s0, latents_per_block), std=0.5)
        nodes.append(Node(f"b{b}_fc", "dense", zs, {}, {"weight": f"b{b}_fc.weight"}))
        nodes.append(Node(f"b{b}_view", "reshape", [f"b{b}_fc"], {"shape": [c, s0, s0]}))
        nodes.append(Node(f"b{b}_mid", "activation", [f"b{b}_view"], {"kind": "tanh"}))
        weights[f"b{b}_up1.weight"] = stream.fill_normal((c, c, 5, 5), std=0.2)
        nodes.append(Node(f"b{b}_up1", "deconv", [f"b{b}_mid"], dict(_DECONV), {"weight": f"b{b}_up1.weight"}))
        nodes.append(Node(f"b{b}_a1", "activation", [f"b{b}_up1"], {"kind": "tanh"}))
        weights[f"b{b}_up2.weight"] = stream.fill_normal((c, 3, 5, 5), std=0.2)
        nodes.append(Node(f"b{b}_up2", "deconv", [f"b{b}_a1"], dict(_DECONV), {"weight": f"b{b}_up2.weight"}))
        y0, y1, x0, x1 = regions[b]
        m = np.zeros((image_size, image_size), np.float32)
        m[y0:y1, x0:x1] = 1.0
        weights[f"b{b}_mask.mask"] = m
        nodes.append(Node(f"b{b}_mask", "mask", [f"b{b}_up2"], {}, {"mask": f"b{b}_mask.mask"}))
        mid_vars.extend((f"b{b}_mid", ch) for ch in range(c))
        labels.extend([b] * c)
    nodes.append(Node("image", "sum", [f"b{b}_mask" for b in range(blocks)]))

    latent = LatentSpec(_intervals(blocks * latents_per_block, (-1.0, 1.0)), "uniform")
    layers = {"mid": mid_vars, "image": [("image", ch) for ch in range(3)]}
    graph = build_graph(latent, nodes, "image", weights, layers)
    return PlantedModel(graph=graph, layer="mid", labels=np.array(labels), regions=regions)
