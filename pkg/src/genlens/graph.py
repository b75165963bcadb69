"""Causal graphs of deterministic structural equations over image tensors.

A graph has K latent source coordinates, each with a closed interval domain,
and a DAG of endogenous nodes.  Every node computes one float32 array from
its parents; the first axis of that array indexes the node's variables
(channels), which is the granularity at which paths, layers, and
interventions operate.  Exactly one node, the output, is a sink.

Parents are referenced by node name or by latent coordinate ("z:3").  The
supported ops are dense, reshape, deconv, batchnorm, activation, sum, and
mask; each declares how its input channels couple to its output channels so
that variable-level reachability is exact rather than node-coarse.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError, ShapeError
from .rng import Stream
from .tensors import apply_activation, batchnorm_infer, conv_transpose2d, matmul

Var = tuple[str, int]  # (node name or "z:k", channel index)

_OPS = ("dense", "reshape", "deconv", "batchnorm", "activation", "sum", "mask")


def latent_ref(k: int) -> str:
    return f"z:{k}"


def is_latent_ref(ref: str) -> bool:
    return ref.startswith("z:")


def latent_index(ref: str) -> int:
    return int(ref[2:])


@dataclass(frozen=True)
class LatentSpec:
    """Latent domain: per-coordinate closed intervals and a sampling law."""

    intervals: np.ndarray  # (K, 2) float32
    distribution: str = "uniform"  # or "truncated_normal"

    @property
    def count(self) -> int:
        return int(self.intervals.shape[0])


@dataclass
class Node:
    name: str
    op: str
    parents: list[str]
    params: dict = field(default_factory=dict)
    weights: dict[str, str] = field(default_factory=dict)  # role -> weight key


@dataclass
class LayerSel:
    """A named set of variables intended to intercept all latent-output paths."""

    name: str
    variables: list[Var]

    def nodes(self) -> list[str]:
        seen: list[str] = []
        for ref, _ in self.variables:
            if ref not in seen:
                seen.append(ref)
        return seen


@dataclass
class LayerCheck:
    """Outcome of is_layer: separation plus minimality."""

    status: str  # "yes" | "no" | "yes_but_not_minimal"
    witness_path: list[Var] | None = None  # for "no": an unblocked path
    removable: Var | None = None  # for "yes_but_not_minimal"

    @property
    def ok(self) -> bool:
        return self.status == "yes"


@dataclass
class ProbeReport:
    """Sampling-based collision probe; evidence, not a proof of injectivity."""

    samples: int
    collisions: int
    min_output_gap: float


class CgmGraph:
    """An immutable-by-convention graph; interventions layer on top.

    ``with_interventions`` returns a shallow overlay sharing nodes and
    weights; evaluation overwrites the targeted channels after computing
    each node, and path queries treat targeted variables as fresh sources.
    """

    def __init__(
        self,
        latent: LatentSpec,
        nodes: list[Node],
        output: str,
        weights: dict[str, np.ndarray],
        layers: dict[str, LayerSel] | None = None,
        interventions: dict[Var, np.ndarray] | None = None,
    ):
        self.latent = latent
        self.nodes: dict[str, Node] = {n.name: n for n in nodes}
        self.output = output
        self.weights = weights
        self.layers = layers or {}
        self.interventions = interventions or {}
        self.shapes: dict[str, tuple[int, ...]] = {}
        self.order: list[str] = []
        self.children: dict[str, list[str]] = {}
        self._layer_cache: dict[str, bool] = {}

    # -- structure helpers -------------------------------------------------

    def channels(self, ref: str) -> int:
        if is_latent_ref(ref):
            return 1
        return self.shapes[ref][0]

    def with_interventions(self, pinned: dict[Var, np.ndarray]) -> "CgmGraph":
        merged = dict(self.interventions)
        for var, value in pinned.items():
            merged[var] = np.asarray(value, dtype=np.float32)
        g = CgmGraph(self.latent, list(self.nodes.values()), self.output, self.weights, self.layers, merged)
        g.shapes = self.shapes
        g.order = self.order
        g.children = self.children
        validate(g)
        return g

    def variable_list(self, node: str) -> list[Var]:
        return [(node, c) for c in range(self.channels(node))]


# -- construction and validation ------------------------------------------


def build_graph(
    latent: LatentSpec,
    nodes: list[Node],
    output: str,
    weights: dict[str, np.ndarray],
    layers: dict[str, list[Var]] | None = None,
) -> CgmGraph:
    """Assemble and fully validate a graph; raises GraphError with a
    distinct message for each structural defect."""
    g = CgmGraph(latent, nodes, output, weights)
    if len(g.nodes) != len(nodes):
        names = [n.name for n in nodes]
        dup = next(n for n in names if names.count(n) > 1)
        raise GraphError(f"duplicate node name {dup!r}")
    _check_references(g)
    g.order = _topological_order(g)
    _infer_shapes(g)
    g.children = _children_map(g)
    validate(g)
    for name, var_list in (layers or {}).items():
        g.layers[name] = _resolve_layer(g, name, var_list)
    return g


def _check_references(g: CgmGraph) -> None:
    for node in g.nodes.values():
        if is_latent_ref(node.name):
            raise GraphError(f"node name {node.name!r} collides with latent reference syntax")
        if node.op not in _OPS:
            raise GraphError(f"node {node.name!r} has unknown op {node.op!r}")
        if not node.parents:
            raise GraphError(f"endogenous node {node.name!r} has no parents")
        for ref in node.parents:
            if is_latent_ref(ref):
                k = latent_index(ref)
                if not 0 <= k < g.latent.count:
                    raise GraphError(
                        f"node {node.name!r} references latent {ref!r} outside 0..{g.latent.count - 1}"
                    )
            elif ref not in g.nodes:
                raise GraphError(f"node {node.name!r} references missing parent {ref!r}")
        for role, key in node.weights.items():
            if key not in g.weights:
                raise GraphError(f"node {node.name!r} references missing weight {key!r} (role {role!r})")
    if g.output not in g.nodes:
        raise GraphError(f"output node {g.output!r} is not defined")
    used = {latent_index(r) for n in g.nodes.values() for r in n.parents if is_latent_ref(r)}
    if used != set(range(g.latent.count)):
        missing = sorted(set(range(g.latent.count)) - used)
        raise GraphError(
            f"latent count mismatch: {g.latent.count} coordinates declared, "
            f"indices {missing} never referenced"
        )


def _topological_order(g: CgmGraph) -> list[str]:
    done: set[str] = set()
    order: list[str] = []
    pending = list(g.nodes)
    while pending:
        progressed = False
        remaining = []
        for name in pending:
            parents = [p for p in g.nodes[name].parents if not is_latent_ref(p)]
            if all(p in done for p in parents):
                order.append(name)
                done.add(name)
                progressed = True
            else:
                remaining.append(name)
        if not progressed:
            cycle = _find_cycle(g, remaining)
            raise GraphError(f"graph contains a cycle: {' -> '.join(cycle)}")
        pending = remaining
    return order


def _find_cycle(g: CgmGraph, candidates: list[str]) -> list[str]:
    # walk parent links until a name repeats
    seen: list[str] = []
    cur = candidates[0]
    while cur not in seen:
        seen.append(cur)
        cur = next(p for p in g.nodes[cur].parents if not is_latent_ref(p) and p in candidates)
    return seen[seen.index(cur) :] + [cur]


def _children_map(g: CgmGraph) -> dict[str, list[str]]:
    children: dict[str, list[str]] = {name: [] for name in g.nodes}
    for node in g.nodes.values():
        for ref in node.parents:
            if not is_latent_ref(ref):
                children[ref].append(node.name)
    return children


def _weight(g: CgmGraph, node: Node, role: str) -> np.ndarray:
    return g.weights[node.weights[role]]


def _infer_shapes(g: CgmGraph) -> None:
    for name in g.order:
        node = g.nodes[name]
        pshapes = [(1,) if is_latent_ref(p) else g.shapes[p] for p in node.parents]
        g.shapes[name] = _out_shape(g, node, pshapes)


def _out_shape(g: CgmGraph, node: Node, pshapes: list[tuple[int, ...]]) -> tuple[int, ...]:
    op = node.op
    if op == "dense":
        w = _weight(g, node, "weight")
        if w.ndim != 2:
            raise GraphError(f"dense node {node.name!r} needs a 2-d weight, got {w.shape}")
        in_dim = sum(int(np.prod(s)) for s in pshapes)
        if w.shape[1] != in_dim:
            raise GraphError(
                f"dense node {node.name!r}: weight expects {w.shape[1]} inputs, parents provide {in_dim}"
            )
        if "bias" in node.weights and _weight(g, node, "bias").shape != (w.shape[0],):
            raise GraphError(f"dense node {node.name!r}: bias shape mismatch")
        return (int(w.shape[0]),)
    if op == "reshape":
        if len(pshapes) != 1 or len(pshapes[0]) != 1:
            raise GraphError(f"reshape node {node.name!r} needs a single vector parent")
        shape = tuple(int(d) for d in node.params["shape"])
        if int(np.prod(shape)) != pshapes[0][0]:
            raise GraphError(
                f"reshape node {node.name!r}: cannot view {pshapes[0][0]} values as {shape}"
            )
        return shape
    if op == "deconv":
        if len(pshapes) != 1 or len(pshapes[0]) != 3:
            raise GraphError(f"deconv node {node.name!r} needs a single (C, H, W) parent")
        w = _weight(g, node, "weight")
        cin, h, win = pshapes[0]
        if w.ndim != 4 or w.shape[0] != cin:
            raise GraphError(
                f"deconv node {node.name!r}: weight {w.shape} incompatible with {cin} input channels"
            )
        stride = int(node.params.get("stride", 1))
        pad = int(node.params.get("pad", 0))
        opad = int(node.params.get("output_padding", 0))
        h_out = (h - 1) * stride - 2 * pad + int(w.shape[2]) + opad
        w_out = (win - 1) * stride - 2 * pad + int(w.shape[3]) + opad
        if h_out < 1 or w_out < 1:
            raise GraphError(f"deconv node {node.name!r} yields non-positive output size")
        if "bias" in node.weights and _weight(g, node, "bias").shape != (w.shape[1],):
            raise GraphError(f"deconv node {node.name!r}: bias shape mismatch")
        return (int(w.shape[1]), h_out, w_out)
    if op == "batchnorm":
        (shape,) = pshapes
        if len(shape) != 3:
            raise GraphError(f"batchnorm node {node.name!r} needs a (C, H, W) parent")
        for role in ("mean", "var", "gamma", "beta"):
            if _weight(g, node, role).shape != (shape[0],):
                raise GraphError(f"batchnorm node {node.name!r}: {role} shape mismatch")
        return shape
    if op == "activation":
        if node.params.get("kind") not in ("relu", "tanh", "sigmoid", "identity"):
            raise GraphError(f"activation node {node.name!r} has invalid kind")
        return pshapes[0]
    if op == "sum":
        if len(pshapes) < 2 or any(s != pshapes[0] for s in pshapes):
            raise GraphError(f"sum node {node.name!r} needs 2+ parents with identical shapes")
        return pshapes[0]
    if op == "mask":
        (shape,) = pshapes
        m = _weight(g, node, "mask")
        if m.shape not in (shape, shape[1:]):
            raise GraphError(
                f"mask node {node.name!r}: mask {m.shape} does not broadcast over {shape}"
            )
        return shape
    raise GraphError(f"node {node.name!r} has unknown op {op!r}")


def validate(g: CgmGraph) -> None:
    """Structural invariants: acyclic, one sink, everything on a latent-output
    path.  Overlays with interventions skip the path-coverage checks, since
    pinning a variable legitimately cuts its upstream cone out of the graph."""
    if g.output not in g.nodes:
        raise GraphError(f"output node {g.output!r} is not defined")
    if not g.order:
        g.order = _topological_order(g)
    if not g.children:
        g.children = _children_map(g)
    if g.children[g.output]:
        raise GraphError(
            f"output {g.output!r} must be a sink but feeds {g.children[g.output]}"
        )
    for name, kids in g.children.items():
        if name != g.output and not kids:
            raise GraphError(f"multiple sinks: node {name!r} has no children (output is {g.output!r})")
    for var, value in g.interventions.items():
        ref, c = var
        if ref not in g.nodes:
            raise GraphError(f"intervention targets unknown node {ref!r}")
        if not 0 <= c < g.channels(ref):
            raise GraphError(f"intervention targets {ref!r}:{c}, node has {g.channels(ref)} channels")
        want = g.shapes[ref][1:]
        if tuple(value.shape) != want:
            raise GraphError(
                f"intervention value for {ref!r}:{c} has shape {value.shape}, expected {want}"
            )
    if g.interventions:
        return
    # with no interventions, every node must sit on some latent-output path;
    # given the checks above this is implied, but verify directly anyway
    reach_out = {g.output}
    stack = [g.output]
    while stack:
        for p in g.nodes[stack.pop()].parents:
            if not is_latent_ref(p) and p not in reach_out:
                reach_out.add(p)
                stack.append(p)
    for name in g.nodes:
        if name not in reach_out:
            raise GraphError(f"node {name!r} lies on no path to the output")


def _resolve_layer(g: CgmGraph, name: str, var_list: list[Var]) -> LayerSel:
    seen: set[Var] = set()
    for ref, c in var_list:
        if is_latent_ref(ref):
            raise GraphError(f"layer {name!r} lists latent {ref!r}; layers are endogenous")
        if ref not in g.nodes:
            raise GraphError(f"layer {name!r} lists unknown node {ref!r}")
        if not 0 <= c < g.channels(ref):
            raise GraphError(f"layer {name!r} lists {ref!r}:{c}, node has {g.channels(ref)} channels")
        if (ref, c) in seen:
            raise GraphError(f"layer {name!r} lists {ref!r}:{c} twice")
        seen.add((ref, c))
    return LayerSel(name, [(ref, int(c)) for ref, c in var_list])


# -- evaluation ------------------------------------------------------------


def clamp_latents(g: CgmGraph, z: np.ndarray) -> np.ndarray:
    """Cast to float32 and clamp each coordinate to its interval, warning
    when anything actually moves."""
    z = np.asarray(z, dtype=np.float32).reshape(-1)
    if z.shape[0] != g.latent.count:
        raise GraphError(f"latent vector has {z.shape[0]} coordinates, graph declares {g.latent.count}")
    lo = g.latent.intervals[:, 0].astype(np.float32)
    hi = g.latent.intervals[:, 1].astype(np.float32)
    clipped = np.clip(z, lo, hi)
    if not np.array_equal(clipped, z):
        moved = np.nonzero(clipped != z)[0]
        warnings.warn(f"latent coordinates {moved.tolist()} outside their domain; clamped")
    return clipped


def _apply_node(g: CgmGraph, node: Node, parent_vals: list[np.ndarray]) -> np.ndarray:
    op = node.op
    if op == "dense":
        x = np.concatenate([p.reshape(-1) for p in parent_vals])
        y = matmul(_weight(g, node, "weight"), x[:, None])[:, 0]
        if "bias" in node.weights:
            y = y + _weight(g, node, "bias")
        return y
    if op == "reshape":
        return parent_vals[0].reshape(tuple(node.params["shape"])).copy()
    if op == "deconv":
        y = conv_transpose2d(
            parent_vals[0][None],
            _weight(g, node, "weight"),
            stride=int(node.params.get("stride", 1)),
            pad=int(node.params.get("pad", 0)),
            output_padding=int(node.params.get("output_padding", 0)),
        )[0]
        if "bias" in node.weights:
            y = y + _weight(g, node, "bias")[:, None, None]
        return y
    if op == "batchnorm":
        return batchnorm_infer(
            parent_vals[0][None],
            _weight(g, node, "mean"),
            _weight(g, node, "var"),
            _weight(g, node, "gamma"),
            _weight(g, node, "beta"),
            eps=float(node.params.get("eps", 1e-5)),
        )[0]
    if op == "activation":
        return apply_activation(parent_vals[0], node.params["kind"])
    if op == "sum":
        acc = parent_vals[0].copy()
        for p in parent_vals[1:]:
            acc += p
        return acc
    if op == "mask":
        return (parent_vals[0] * _weight(g, node, "mask")).astype(np.float32)
    raise GraphError(f"unknown op {op!r}")


def _pin_intervened(g: CgmGraph, name: str, value: np.ndarray) -> np.ndarray:
    for c in range(g.channels(name)):
        pinned = g.interventions.get((name, c))
        if pinned is not None:
            value[c] = pinned
    return value


def evaluate(
    g: CgmGraph,
    z: np.ndarray,
    record: list[str] | None = None,
) -> np.ndarray | tuple[np.ndarray, dict[str, np.ndarray]]:
    """Run the structural equations on latent vector z.

    With ``record``, also returns copies of the named nodes' values as a
    dict, for later replay through evaluate_from_layer or interventions.
    """
    z = clamp_latents(g, z)
    values: dict[str, np.ndarray] = {}
    for name in g.order:
        node = g.nodes[name]
        parent_vals = [
            np.array([z[latent_index(p)]], dtype=np.float32) if is_latent_ref(p) else values[p]
            for p in node.parents
        ]
        values[name] = _pin_intervened(g, name, _apply_node(g, node, parent_vals))
    y = values[g.output]
    if record is None:
        return y
    for name in record:
        if name not in values:
            raise GraphError(f"cannot record unknown node {name!r}")
    return y, {name: values[name].copy() for name in record}


def evaluate_from_layer(g: CgmGraph, layer: LayerSel | str, values: dict[str, np.ndarray]) -> np.ndarray:
    """Evaluate only the part of the graph downstream of a layer, seeding the
    layer's nodes with the given full node values.

    Raises if a node needed for the output still depends on a latent, which
    happens exactly when the supplied node set fails to cut all paths.
    """
    sel = g.layers[layer] if isinstance(layer, str) else layer
    seeded: dict[str, np.ndarray] = {}
    for name in sel.nodes():
        if name not in values:
            raise GraphError(f"layer {sel.name!r} needs a value for node {name!r}")
        v = np.asarray(values[name], dtype=np.float32)
        if tuple(v.shape) != g.shapes[name]:
            raise GraphError(
                f"value for node {name!r} has shape {v.shape}, expected {g.shapes[name]}"
            )
        seeded[name] = v
    needed: set[str] = set()
    stack = [g.output]
    while stack:
        name = stack.pop()
        if name in needed or name in seeded:
            continue
        needed.add(name)
        for p in g.nodes[name].parents:
            if is_latent_ref(p):
                raise GraphError(
                    f"node {name!r} still depends on latent {p!r}; "
                    f"layer {sel.name!r} does not cut all paths"
                )
            stack.append(p)
    computed = dict(seeded)
    for name in g.order:
        if name not in needed:
            continue
        node = g.nodes[name]
        parent_vals = [computed[p] for p in node.parents]
        computed[name] = _pin_intervened(g, name, _apply_node(g, node, parent_vals))
    return computed[g.output] if g.output in needed else seeded[g.output]


# -- variable-level reachability -------------------------------------------


def _var_children(g: CgmGraph, var: Var):
    ref, c = var
    kids = []
    if is_latent_ref(ref):
        for node in g.nodes.values():
            if ref in node.parents:
                kids.append(node.name)
    else:
        kids = g.children[ref]
    for child in kids:
        node = g.nodes[child]
        op = node.op
        if op in ("dense", "deconv"):
            for oc in range(g.channels(child)):
                yield (child, oc)
        elif op == "reshape":
            area = int(np.prod(g.shapes[child][1:]))
            yield (child, c // area)
        else:  # batchnorm, activation, sum, mask: channel-diagonal
            yield (child, c)


def _var_parents(g: CgmGraph, var: Var):
    ref, c = var
    if is_latent_ref(ref):
        return
    node = g.nodes[ref]
    op = node.op
    if op in ("dense", "deconv"):
        for p in node.parents:
            for pc in range(g.channels(p)):
                yield (p, pc)
    elif op == "reshape":
        area = int(np.prod(g.shapes[ref][1:]))
        for t in range(c * area, (c + 1) * area):
            yield (node.parents[0], t)
    else:
        for p in node.parents:
            yield (p, c)


def _latent_vars(g: CgmGraph) -> list[Var]:
    return [(latent_ref(k), 0) for k in range(g.latent.count)]


def _forward_reach(g: CgmGraph, starts: list[Var], blocked: set[Var]):
    """BFS along variable edges; blocked variables are never entered.
    Edges into intervened variables do not exist.  Returns (visited, parent)."""
    visited: set[Var] = set()
    parent: dict[Var, Var] = {}
    queue: deque[Var] = deque()
    for s in starts:
        if s not in blocked and s not in visited:
            visited.add(s)
            queue.append(s)
    while queue:
        u = queue.popleft()
        for v in _var_children(g, u):
            if v in visited or v in blocked or v in g.interventions:
                continue
            visited.add(v)
            parent[v] = u
            queue.append(v)
    return visited, parent


def _backward_reach(g: CgmGraph, starts: list[Var], blocked: set[Var]) -> set[Var]:
    visited: set[Var] = set()
    queue: deque[Var] = deque(s for s in starts if s not in blocked)
    visited.update(queue)
    while queue:
        u = queue.popleft()
        if u in g.interventions:
            continue  # pinned variables have no in-edges
        for v in _var_parents(g, u):
            if v not in visited and v not in blocked:
                visited.add(v)
                queue.append(v)
    return visited


def is_layer(g: CgmGraph, candidate: LayerSel | str | list[Var]) -> LayerCheck:
    """Check that a variable set intercepts every latent-output path and
    that no member can be dropped.

    Returns status "no" with a concrete witness path when separation fails,
    and "yes_but_not_minimal" naming a removable variable when it is not
    minimal.
    """
    if isinstance(candidate, str):
        sel = g.layers[candidate]
    elif isinstance(candidate, LayerSel):
        sel = candidate
    else:
        sel = _resolve_layer(g, "<candidate>", list(candidate))
    blocked = set(sel.variables)
    out_vars = g.variable_list(g.output)
    reach, parent = _forward_reach(g, _latent_vars(g), blocked)
    hit = next((v for v in out_vars if v in reach), None)
    if hit is not None:
        path = [hit]
        while path[-1] in parent:
            path.append(parent[path[-1]])
        return LayerCheck("no", witness_path=path[::-1])
    coreach = _backward_reach(g, out_vars, blocked)
    out_set = set(out_vars)
    for var in sel.variables:
        # var is essential iff some path runs latents -> var -> output while
        # avoiding the rest of the candidate; with the candidate blocked on
        # both sweeps that reduces to having an in-neighbour in the forward
        # reach and an out-neighbour in the backward reach
        enters = var not in g.interventions and any(u in reach for u in _var_parents(g, var))
        exits = var in out_set or any(w in coreach for w in _var_children(g, var))
        if not (enters and exits):
            return LayerCheck("yes_but_not_minimal", removable=var)
    return LayerCheck("yes")


def verified_layer(g: CgmGraph, name: str) -> LayerSel:
    """Fetch a named layer, checking the separator property once and caching."""
    if name not in g.layers:
        raise GraphError(f"graph defines no layer named {name!r}")
    if name not in g._layer_cache:
        check = is_layer(g, name)
        if check.status == "no":
            path = " -> ".join(f"{r}:{c}" for r, c in check.witness_path or [])
            raise GraphError(f"layer {name!r} fails to intercept all paths: {path}")
        g._layer_cache[name] = True
    return g.layers[name]


def latent_ancestors(g: CgmGraph, variables: list[Var]) -> set[int]:
    """Indices of latent coordinates with a directed path into the variables."""
    reach = _backward_reach(g, list(variables), set())
    return {latent_index(ref) for ref, _ in reach if is_latent_ref(ref)}


def shares_latent_ancestor(g: CgmGraph, part: list[Var], layer: LayerSel | str) -> bool:
    """Whether a module shares any latent ancestor with the rest of its layer."""
    sel = g.layers[layer] if isinstance(layer, str) else layer
    part_set = set(part)
    rest = [v for v in sel.variables if v not in part_set]
    return bool(latent_ancestors(g, list(part)) & latent_ancestors(g, rest))


def injectivity_probe(g: CgmGraph, samples: int = 64, seed: int = 0, tol: float = 1e-6) -> ProbeReport:
    """Sample distinct latents and look for output collisions.

    A report with zero collisions is evidence, never proof, that the latent
    mapping is injective on the sampled region.
    """
    stream = Stream(seed).child("injectivity")
    zs = stream.latents(g.latent.intervals, g.latent.distribution, samples)
    outs = [evaluate(g, z).reshape(-1) for z in zs]
    collisions = 0
    min_gap = float("inf")
    for i in range(samples):
        for j in range(i + 1, samples):
            gap = float(np.max(np.abs(outs[i] - outs[j]))) if outs[i].size else 0.0
            if float(np.max(np.abs(zs[i] - zs[j]))) > tol:
                min_gap = min(min_gap, gap)
                if gap <= tol:
                    collisions += 1
    return ProbeReport(samples=samples, collisions=collisions, min_output_gap=min_gap)
