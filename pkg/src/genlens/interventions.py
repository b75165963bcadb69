"""Interventions, counterfactuals, and hybridization.

An intervention pins a set of variables (channels) to constant values,
replacing their structural assignments.  A counterfactual evaluates the
intervened graph on a latent vector.  Hybridization is the special case
where the pinned values were recorded from a reference pass of the same
graph on a second latent vector, restricted to a module within a verified
layer: the result shows what the first sample would look like with the
module's state borrowed from the second.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GraphError
from .graph import CgmGraph, LayerSel, Var, clamp_latents, evaluate, evaluate_from_layer, verified_layer


@dataclass
class ModuleSel:
    """A subset of a named layer's variables."""

    layer: str
    channels: list[Var]

    def resolve(self, g: CgmGraph) -> LayerSel:
        sel = verified_layer(g, self.layer)
        members = set(sel.variables)
        for var in self.channels:
            if var not in members:
                raise GraphError(
                    f"module channel {var[0]!r}:{var[1]} is not a variable of layer {self.layer!r}"
                )
        return sel


@dataclass
class Intervention:
    """Constant replacements: one value per targeted variable."""

    targets: list[Var]
    values: list[np.ndarray]

    def as_dict(self) -> dict[Var, np.ndarray]:
        if len(self.targets) != len(self.values):
            raise GraphError(
                f"intervention has {len(self.targets)} targets but {len(self.values)} values"
            )
        return {t: np.asarray(v, dtype=np.float32) for t, v in zip(self.targets, self.values)}


def intervene(g: CgmGraph, iv: Intervention) -> CgmGraph:
    """Overlay graph with the intervention applied; weights stay shared."""
    return g.with_interventions(iv.as_dict())


def counterfactual(g: CgmGraph, iv: Intervention, z: np.ndarray) -> np.ndarray:
    """Output of the intervened graph on latent vector z."""
    return evaluate(intervene(g, iv), z)


def module_values(g: CgmGraph, module: ModuleSel, z: np.ndarray) -> Intervention:
    """Record the module's variable values from a clean pass on z, packaged
    as an intervention that pins exactly those variables."""
    module.resolve(g)
    nodes = sorted({ref for ref, _ in module.channels})
    _, rec = evaluate(g, z, record=nodes)
    return Intervention(
        targets=list(module.channels),
        values=[rec[ref][c].copy() for ref, c in module.channels],
    )


def hybridize(
    g: CgmGraph,
    module: ModuleSel,
    z1: np.ndarray,
    z2: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Regenerate z1's output with the module's state recorded from z2.

    Returns (hybrid, orig1, orig2).  Equivalent to the counterfactual that
    pins the module to its z2 values, but computed by re-running only the
    part of the graph downstream of the module's layer.
    """
    sel = module.resolve(g)
    layer_nodes = sel.nodes()
    module_nodes = sorted({ref for ref, _ in module.channels})
    orig1, rec1 = evaluate(g, z1, record=layer_nodes)
    orig2, rec2 = evaluate(g, z2, record=module_nodes)
    mixed = {name: rec1[name].copy() for name in layer_nodes}
    for ref, c in module.channels:
        mixed[ref][c] = rec2[ref][c]
    hybrid = evaluate_from_layer(g, sel, mixed)
    return hybrid, orig1, orig2


def apply_latent_transform(
    g: CgmGraph,
    coordinate: int,
    transform: Callable[[float], float],
    z: np.ndarray,
) -> np.ndarray:
    """Evaluate with one latent coordinate passed through a scalar function.

    The transformed value is clamped back to the coordinate's domain (with
    a warning) before evaluation, like any other latent input.
    """
    if not 0 <= coordinate < g.latent.count:
        raise GraphError(f"latent coordinate {coordinate} outside 0..{g.latent.count - 1}")
    z = clamp_latents(g, z)
    z2 = z.copy()
    z2[coordinate] = np.float32(transform(float(z[coordinate])))
    return evaluate(g, z2)
