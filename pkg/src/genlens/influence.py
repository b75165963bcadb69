"""Influence maps: mean absolute output effect of hybridizing a module.

The influence map of a module E inside a layer is the expectation, over
independent latent pairs (z1, z2), of |hybrid(z1, z2) - output(z1)| taken
pixelwise.  Per-channel maps keep the output channels separate; the gray
map averages them with equal weight; the individual influence of E is the
pixel average of the gray map.

Estimates accumulate in float64 and are averaged over a fixed chunking of
the pair budget, with one derived seed per chunk, so results are identical
for any worker count and reruns are bit-stable.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import CgmGraph, Var, evaluate, evaluate_from_layer, verified_layer
from .interventions import ModuleSel
from .rng import Stream

_CHUNK = 16  # latent pairs per work unit; fixed so worker count cannot matter


@dataclass
class InfluenceMap:
    """Mean absolute effect of one module on the output."""

    per_channel: np.ndarray  # (C, H, W) float32
    gray: np.ndarray  # (H, W) float32, unweighted channel mean
    layer: str
    channels: list[Var]
    n_pairs: int
    seed: int
    workers: int = 1


@dataclass
class EimStack:
    """Per-variable influence maps of a layer, one gray map per row."""

    rows: np.ndarray  # (R, H*W) float32
    layer: str
    height: int
    width: int
    seed: int
    n_pairs: int
    binary: bool = field(default=False)

    def maps(self) -> np.ndarray:
        return self.rows.reshape(self.rows.shape[0], self.height, self.width)


def individual_influence(m: InfluenceMap) -> float:
    """Pixel average of the gray map."""
    return float(np.mean(m.gray.astype(np.float64)))


def _chunk_sizes(n_pairs: int) -> list[int]:
    return [min(_CHUNK, n_pairs - start) for start in range(0, n_pairs, _CHUNK)]


def _sweep(
    g: CgmGraph,
    layer_name: str,
    modules: list[list[Var]],
    n_pairs: int,
    seed: int,
    workers: int,
) -> np.ndarray:
    """Accumulated |hybrid - original| sums, shape (M, C, H, W) float64.

    Each chunk draws its own latent pairs from a seed derived from (seed,
    layer, chunk index), evaluates both passes once, and reuses the recorded
    layer values for every module, so all modules see identical samples.
    """
    if n_pairs < 1:
        raise ValidationError("n_pairs must be at least 1")
    sel = verified_layer(g, layer_name)
    members = set(sel.variables)
    for module in modules:
        for var in module:
            if var not in members:
                raise ValidationError(f"module channel {var[0]!r}:{var[1]} not in layer {layer_name!r}")
    layer_nodes = sel.nodes()
    out_shape = g.shapes[g.output]
    root = Stream(seed)

    def run_chunk(index: int, count: int) -> np.ndarray:
        stream = root.child(f"pairs:{layer_name}:{index}")
        z1s = stream.latents(g.latent.intervals, g.latent.distribution, count)
        z2s = stream.latents(g.latent.intervals, g.latent.distribution, count)
        sums = np.zeros((len(modules),) + out_shape, dtype=np.float64)
        for i in range(count):
            y1, rec1 = evaluate(g, z1s[i], record=layer_nodes)
            _, rec2 = evaluate(g, z2s[i], record=layer_nodes)
            for m, module in enumerate(modules):
                if not module:
                    continue  # empty module: hybrid equals the original exactly
                mixed = {name: rec1[name].copy() for name in layer_nodes}
                for ref, c in module:
                    mixed[ref][c] = rec2[ref][c]
                hybrid = evaluate_from_layer(g, sel, mixed)
                sums[m] += np.abs(hybrid.astype(np.float64) - y1.astype(np.float64))
        return sums

    sizes = _chunk_sizes(n_pairs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run_chunk, range(len(sizes)), sizes))
    else:
        partials = [run_chunk(i, c) for i, c in enumerate(sizes)]
    total = np.zeros((len(modules),) + out_shape, dtype=np.float64)
    for part in partials:  # fixed ascending-chunk reduction order
        total += part
    return total


def influence_map(
    g: CgmGraph,
    module: ModuleSel,
    n_pairs: int = 256,
    seed: int = 0,
    workers: int = 1,
) -> InfluenceMap:
    """Estimate the influence map of one module."""
    module.resolve(g)
    sums = _sweep(g, module.layer, [list(module.channels)], n_pairs, seed, workers)[0]
    mean = sums / float(n_pairs)
    gray = mean.mean(axis=0)
    return InfluenceMap(
        per_channel=mean.astype(np.float32),
        gray=gray.astype(np.float32),
        layer=module.layer,
        channels=list(module.channels),
        n_pairs=n_pairs,
        seed=seed,
        workers=workers,
    )


def module_influence_maps(
    g: CgmGraph,
    layer: str,
    modules: list[list[Var]],
    n_pairs: int = 256,
    seed: int = 0,
    workers: int = 1,
) -> list[InfluenceMap]:
    """Influence maps for several modules of one layer over shared samples."""
    sums = _sweep(g, layer, modules, n_pairs, seed, workers)
    out = []
    for module, s in zip(modules, sums):
        mean = s / float(n_pairs)
        out.append(
            InfluenceMap(
                per_channel=mean.astype(np.float32),
                gray=mean.mean(axis=0).astype(np.float32),
                layer=layer,
                channels=list(module),
                n_pairs=n_pairs,
                seed=seed,
                workers=workers,
            )
        )
    return out


def elementary_influence_maps(
    g: CgmGraph,
    layer: str,
    n_pairs: int = 256,
    seed: int = 0,
    workers: int = 1,
) -> EimStack:
    """One influence map per layer variable, stacked as gray rows."""
    sel = verified_layer(g, layer)
    out_shape = g.shapes[g.output]
    if len(out_shape) != 3:
        raise ValidationError(f"output {g.output!r} is not an image, cannot stack maps")
    modules = [[var] for var in sel.variables]
    sums = _sweep(g, layer, modules, n_pairs, seed, workers)
    gray = sums.mean(axis=1) / float(n_pairs)  # (R, H, W)
    return EimStack(
        rows=gray.reshape(len(modules), -1).astype(np.float32),
        layer=layer,
        height=out_shape[1],
        width=out_shape[2],
        seed=seed,
        n_pairs=n_pairs,
    )


@dataclass
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def influence_size_regression(points: list[tuple[float, float]]) -> RegressionResult:
    """Ordinary least squares of individual influence against module size."""
    if len(points) < 2:
        raise ValidationError("regression needs at least two points")
    x = np.asarray([p[0] for p in points], dtype=np.float64)
    y = np.asarray([p[1] for p in points], dtype=np.float64)
    if float(np.ptp(x)) == 0.0:
        raise ValidationError("regression needs at least two distinct module sizes")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RegressionResult(slope=slope, intercept=intercept, r_squared=r2, n_points=len(points))
