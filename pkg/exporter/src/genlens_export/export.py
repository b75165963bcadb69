"""Checkpoint conversion: torch state dict to manifest + blob + parity file.

The output contract is the engine's model format: a cgm-manifest JSON
document describing the computation graph and a CGMB blob holding the
tensors.  Every tensor in the source checkpoint must map to exactly one
manifest weight name; the builtin tables cover checkpoints saved from this
package's Generator modules, and a custom mapping table adapts checkpoints
with other naming schemes.  Mapping a source name to None drops it
(torch's num_batches_tracked bookkeeping is dropped this way by default).

Transposed-convolution kernels are stored in the blob as (Cin, Cout, kh,
kw).  Torch's ConvTranspose2d uses that layout already, so the conversion
for torch checkpoints is the identity.  Batch norm is exported in inference
form: running mean and variance are kept as separate tensors, never fused
into the affine parameters.

Alongside the model the exporter writes a parity file: latent vectors drawn
uniformly inside the declared latent box and the corresponding outputs of
the torch forward pass, packed as CGMB tensors "z" and "y".  Consumers can
replay the latents and compare outputs to validate an export end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .blob import dump_tensors
from .models import ARCHITECTURES, ArchSpec, Generator


class ExportError(ValueError):
    """A checkpoint, mapping table, or architecture key is unusable."""


@dataclass(frozen=True)
class ExportSpec:
    """One conversion job: where the checkpoint is, what architecture it
    holds, where the outputs go, and how source tensor names map to
    manifest weight names (None values extend the builtin table)."""

    checkpoint: str | Path
    arch: str
    out_manifest: str | Path
    out_blob: str | Path | None = None
    out_parity: str | Path | None = None
    mapping: dict[str, str | None] | None = None
    parity_seed: int = 0
    parity_count: int = 8


@dataclass(frozen=True)
class ExportResult:
    manifest_path: Path
    blob_path: Path
    parity_path: Path
    tensor_count: int
    parity_count: int


def _arch_spec(arch: str) -> ArchSpec:
    if arch not in ARCHITECTURES:
        raise ExportError(f"unknown architecture {arch!r}; choose from {sorted(ARCHITECTURES)}")
    return ARCHITECTURES[arch]


def _bn_indices(spec: ArchSpec) -> list[int]:
    return list(range(spec.n_stages))  # bn0 after the dense stage, bn{i} after up{i}


def builtin_mapping(spec: ArchSpec) -> dict[str, str | None]:
    """Source-to-manifest name table for checkpoints saved from Generator."""
    table: dict[str, str | None] = {
        "fc.weight": "fc.weight",
        "fc.bias": "fc.bias",
    }
    for i in _bn_indices(spec):
        table[f"bn{i}.weight"] = f"bn{i}.gamma"
        table[f"bn{i}.bias"] = f"bn{i}.beta"
        table[f"bn{i}.running_mean"] = f"bn{i}.mean"
        table[f"bn{i}.running_var"] = f"bn{i}.var"
        table[f"bn{i}.num_batches_tracked"] = None
    for i in range(1, spec.n_stages + 1):
        table[f"up{i}.weight"] = f"up{i}.weight"
    return table


def expected_shapes(spec: ArchSpec) -> dict[str, tuple[int, ...]]:
    """Manifest weight name to required tensor shape."""
    c0, s0 = spec.base_channels, spec.base_side
    shapes: dict[str, tuple[int, ...]] = {
        "fc.weight": (c0 * s0 * s0, spec.latent_count),
        "fc.bias": (c0 * s0 * s0,),
    }
    stage_in = [c0] + list(spec.stage_channels[:-1])
    for i in _bn_indices(spec):
        channels = c0 if i == 0 else spec.stage_channels[i - 1]
        for role in ("gamma", "beta", "mean", "var"):
            shapes[f"bn{i}.{role}"] = (channels,)
    for i, cout in enumerate(spec.stage_channels, start=1):
        shapes[f"up{i}.weight"] = (stage_in[i - 1], cout, 5, 5)
    return shapes


def manifest_dict(spec: ArchSpec, weights_file: str) -> dict:
    """The cgm-manifest document for one architecture."""
    c0, s0 = spec.base_channels, spec.base_side
    nodes: list[dict] = [
        {
            "name": "fc",
            "op": "dense",
            "parents": [f"z:{k}" for k in range(spec.latent_count)],
            "params": {},
            "weights": {"weight": "fc.weight", "bias": "fc.bias"},
        },
        {"name": "view", "op": "reshape", "parents": ["fc"], "params": {"shape": [c0, s0, s0]}, "weights": {}},
        _bn_node("bn0", "view"),
        {"name": "act0", "op": "activation", "parents": ["bn0"], "params": {"kind": "relu"}, "weights": {}},
    ]
    layers: dict[str, list[list]] = {"level0": [["act0", c] for c in range(c0)]}
    prev = "act0"
    for i, cout in enumerate(spec.stage_channels, start=1):
        up = f"up{i}"
        nodes.append({
            "name": up,
            "op": "deconv",
            "parents": [prev],
            "params": {"stride": 2, "pad": 2, "output_padding": 1},
            "weights": {"weight": f"{up}.weight"},
        })
        if i < spec.n_stages:
            nodes.append(_bn_node(f"bn{i}", up))
            nodes.append({
                "name": f"act{i}",
                "op": "activation",
                "parents": [f"bn{i}"],
                "params": {"kind": "relu"},
                "weights": {},
            })
            layers[f"level{i}"] = [[f"act{i}", c] for c in range(cout)]
            prev = f"act{i}"
        else:
            nodes.append({"name": "image", "op": "activation", "parents": [up], "params": {"kind": "tanh"}, "weights": {}})
            layers["image"] = [["image", c] for c in range(cout)]
    lo, hi = spec.interval
    return {
        "format": "cgm-manifest",
        "version": 1,
        "latent": {
            "count": spec.latent_count,
            "distribution": spec.distribution,
            "intervals": [[float(lo), float(hi)] for _ in range(spec.latent_count)],
        },
        "nodes": nodes,
        "output": "image",
        "layers": layers,
        "weights_file": weights_file,
    }


def _bn_node(name: str, parent: str) -> dict:
    return {
        "name": name,
        "op": "batchnorm",
        "parents": [parent],
        "params": {"eps": 1e-5},
        "weights": {role: f"{name}.{role}" for role in ("mean", "var", "gamma", "beta")},
    }


def _load_checkpoint(path: Path) -> dict[str, torch.Tensor]:
    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ExportError(f"cannot load checkpoint {path}: {exc}") from exc
    if not isinstance(state, dict):
        raise ExportError(f"checkpoint {path} is not a flat name-to-tensor dict, got {type(state).__name__}")
    for name, value in state.items():
        if not isinstance(value, torch.Tensor):
            raise ExportError(f"checkpoint entry {name!r} is not a tensor, got {type(value).__name__}")
    return state


def _collect_tensors(
    state: dict[str, torch.Tensor],
    table: dict[str, str | None],
    shapes: dict[str, tuple[int, ...]],
) -> dict[str, np.ndarray]:
    tensors: dict[str, np.ndarray] = {}
    source_of: dict[str, str] = {}
    for name in sorted(state):
        if name not in table:
            raise ExportError(f"unmapped parameter {name!r} in checkpoint")
        target = table[name]
        if target is None:
            continue
        if target not in shapes:
            raise ExportError(f"mapping sends {name!r} to {target!r}, which is not a weight of this architecture")
        if target in tensors:
            raise ExportError(f"both {source_of[target]!r} and {name!r} map to weight {target!r}")
        arr = state[name].detach().cpu().numpy()
        if tuple(arr.shape) != shapes[target]:
            raise ExportError(
                f"parameter {name!r} has shape {tuple(arr.shape)}, "
                f"expected {shapes[target]} for weight {target!r}"
            )
        tensors[target] = np.asarray(arr, dtype=np.float32)
        source_of[target] = name
    missing = [name for name in sorted(shapes) if name not in tensors]
    if missing:
        raise ExportError("checkpoint provides no tensor for weight " + ", ".join(repr(m) for m in missing))
    return tensors


def _parity_forward(spec: ArchSpec, tensors: dict[str, np.ndarray], seed: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Run the exported tensors through the torch forward on fresh latents."""
    inverse = {v: k for k, v in builtin_mapping(spec).items() if v is not None}
    state = {inverse[name]: torch.from_numpy(tensors[name].copy()) for name in tensors}
    for i in _bn_indices(spec):
        state[f"bn{i}.num_batches_tracked"] = torch.zeros((), dtype=torch.long)
    model = Generator(spec)
    model.load_state_dict(state, strict=True)
    model.eval()
    lo, hi = spec.interval
    rng = np.random.default_rng(seed)
    z = rng.uniform(lo, hi, size=(count, spec.latent_count)).astype(np.float32)
    with torch.no_grad():
        y = model(torch.from_numpy(z)).numpy().astype(np.float32)
    return z, y


def export_checkpoint(spec: ExportSpec) -> ExportResult:
    """Convert one checkpoint; returns the written paths and counts."""
    arch = _arch_spec(spec.arch)
    if spec.parity_count < 1:
        raise ExportError(f"parity count must be at least 1, got {spec.parity_count}")
    table = builtin_mapping(arch)
    if spec.mapping:
        for source, target in spec.mapping.items():
            if target is not None and not isinstance(target, str):
                raise ExportError(f"mapping for {source!r} must be a string or null, got {target!r}")
        table.update(spec.mapping)

    state = _load_checkpoint(Path(spec.checkpoint))
    shapes = expected_shapes(arch)
    tensors = _collect_tensors(state, table, shapes)
    z, y = _parity_forward(arch, tensors, spec.parity_seed, spec.parity_count)

    manifest_path = Path(spec.out_manifest)
    blob_path = Path(spec.out_blob) if spec.out_blob else manifest_path.with_suffix(".cgmb")
    parity_path = (
        Path(spec.out_parity)
        if spec.out_parity
        else manifest_path.parent / (manifest_path.stem + ".parity.cgmb")
    )
    for path in (manifest_path, blob_path, parity_path):
        path.parent.mkdir(parents=True, exist_ok=True)

    blob_path.write_bytes(dump_tensors(tensors))
    manifest = manifest_dict(arch, weights_file=blob_path.name)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    parity_path.write_bytes(dump_tensors({"z": z, "y": y}))
    return ExportResult(
        manifest_path=manifest_path,
        blob_path=blob_path,
        parity_path=parity_path,
        tensor_count=len(tensors),
        parity_count=spec.parity_count,
    )
