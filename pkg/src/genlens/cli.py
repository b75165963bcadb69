"""Command line interface.

Subcommands cover the whole pipeline: building models, sampling images,
hybridizing modules, estimating influence maps, clustering them, probing
cluster stability, and graph queries.  Every command takes --seed, and any
data written to CSV starts with a provenance line (tool version, command,
resolved options; never a timestamp), so reruns with identical flags yield
byte-identical files.  Progress goes to stdout; data goes to files.

A JSON config file may supply defaults for any option (keys are flag names
with dashes replaced by underscores); explicit command line values win.

Exit codes: 0 on success, 2 for invalid inputs or arguments, 1 for
unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import assign_clusters, fit_clusters, match_labelings, preprocess_maps, stability_analysis
from .errors import GenlensError, ValidationError
from .factories import list_architectures, make_planted_generator, make_seeded_generator
from .graph import evaluate, is_layer, latent_ancestors, shares_latent_ancestor, verified_layer
from .influence import (
    elementary_influence_maps,
    individual_influence,
    influence_size_regression,
    module_influence_maps,
)
from .interventions import ModuleSel, hybridize
from .modelio import load_eims, load_model, read_csv, save_eims, save_model, write_csv, write_montage_png, write_png
from .rng import Stream


def _parse_int_list(text: str) -> list[int]:
    """'2..6' -> [2,3,4,5,6]; '3' -> [3]; '2,4,8' -> [2,4,8]."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValidationError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(part) for part in text.split(",") if part]


def _parse_channel_spec(text: str, count: int) -> list[int]:
    """'0-7,12' -> [0..7,12]; 'all' -> every index below count."""
    if text.strip() == "all":
        return list(range(count))
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    for idx in out:
        if not 0 <= idx < count:
            raise ValidationError(f"channel index {idx} outside 0..{count - 1}")
    if len(set(out)) != len(out):
        raise ValidationError(f"channel spec {text!r} repeats an index")
    return out


def _provenance(command: str, options: dict) -> str:
    parts = " ".join(f"{k}={options[k]}" for k in sorted(options))
    return f"genlens {__version__} | {command} | {parts}"


def _ensure_parent(*paths) -> None:
    for path in paths:
        if path:
            Path(path).parent.mkdir(parents=True, exist_ok=True)


def _module_from_args(g, layer_name: str, args) -> tuple[ModuleSel, str]:
    """Build a module from --channels indices or --module cluster:N."""
    sel = verified_layer(g, layer_name)
    if args.module:
        kind, _, num = args.module.partition(":")
        if kind != "cluster" or not num:
            raise ValidationError(f"--module must look like cluster:N, got {args.module!r}")
        if not args.clusters:
            raise ValidationError("--module cluster:N needs --clusters (assignment CSV)")
        wanted = int(num)
        header, rows, _ = read_csv(args.clusters)
        if header[:2] != ["row", "cluster"]:
            raise ValidationError(f"{args.clusters}: expected columns row,cluster")
        indices = [int(r[0]) for r in rows if int(r[1]) == wanted]
        if not indices:
            raise ValidationError(f"no rows carry cluster {wanted} in {args.clusters}")
        label = f"cluster:{wanted}"
    elif args.channels:
        indices = _parse_channel_spec(args.channels, len(sel.variables))
        label = f"channels:{args.channels}"
    else:
        raise ValidationError("select a module with --channels or --module cluster:N")
    for idx in indices:
        if not 0 <= idx < len(sel.variables):
            raise ValidationError(f"row {idx} outside layer {layer_name!r} (size {len(sel.variables)})")
    return ModuleSel(layer_name, [sel.variables[i] for i in indices]), label


# -- subcommand bodies -------------------------------------------------------


def cmd_make_model(args) -> int:
    if not args.planted and not args.arch:
        raise ValidationError("choose an architecture with --arch or pass --planted")
    _ensure_parent(args.out_manifest, args.out_blob, args.out_partition)
    if args.planted:
        planted = make_planted_generator(
            seed=args.seed,
            blocks=args.blocks,
            latents_per_block=args.latents_per_block,
            channels_per_block=args.channels_per_block,
            image_size=args.image_size,
            layout=args.layout,
        )
        g = planted.graph
        save_model(g, args.out_manifest, args.out_blob)
        if args.out_partition:
            prov = _provenance("make-model", {"seed": args.seed, "planted": True, "layout": args.layout})
            rows = [(i, int(b)) for i, b in enumerate(planted.labels)]
            write_csv(args.out_partition, ["row", "cluster"], rows, prov)
            print(f"wrote ground-truth partition to {args.out_partition}")
    else:
        g = make_seeded_generator(args.arch, seed=args.seed)
        save_model(g, args.out_manifest, args.out_blob)
    print(f"wrote model ({len(g.nodes)} nodes, {sum(w.size for w in g.weights.values())} weights) "
          f"to {args.out_manifest}")
    return 0


def cmd_gen(args) -> int:
    g = load_model(args.manifest, args.blob)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.latents:
        header, rows, _ = read_csv(args.latents)
        zs = np.array([[float(v) for v in row] for row in rows], dtype=np.float32)
        if zs.shape[1] != g.latent.count:
            raise ValidationError(f"latent file has {zs.shape[1]} columns, model needs {g.latent.count}")
    else:
        stream = Stream(args.seed).child("gen")
        zs = stream.latents(g.latent.intervals, g.latent.distribution, args.count)
    outputs = []
    for i, z in enumerate(zs):
        y = evaluate(g, z)
        outputs.append(y)
        write_png(out_dir / f"sample_{i:03d}.png", y)
    prov = _provenance("gen", {"seed": args.seed, "count": len(zs), "manifest": Path(args.manifest).name})
    write_csv(
        out_dir / "latents.csv",
        [f"z{k}" for k in range(g.latent.count)],
        [[float(v) for v in z] for z in zs],
        prov,
    )
    if args.save_raw:
        np.save(out_dir / "samples.npy", np.stack(outputs))
    print(f"wrote {len(zs)} samples to {out_dir}")
    return 0


def cmd_hybrid(args) -> int:
    g = load_model(args.manifest, args.blob)
    module, label = _module_from_args(g, args.layer, args)
    stream = Stream(args.seed).child("hybrid")
    z1s = stream.latents(g.latent.intervals, g.latent.distribution, args.pairs)
    z2s = stream.latents(g.latent.intervals, g.latent.distribution, args.pairs)
    tiles = []
    raws = []
    for z1, z2 in zip(z1s, z2s):
        hybrid, orig1, orig2 = hybridize(g, module, z1, z2)
        tiles.extend([orig1, orig2, hybrid])
        raws.append(np.stack([orig1, orig2, hybrid]))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_montage_png(out_dir / "hybrids.png", tiles, columns=3)
    if args.save_raw:
        np.save(out_dir / "hybrids.npy", np.stack(raws))
    print(f"wrote {args.pairs} (original, donor, hybrid) rows for {label} to {out_dir / 'hybrids.png'}")
    return 0


def cmd_eim(args) -> int:
    _ensure_parent(args.out, args.png)
    g = load_model(args.manifest, args.blob)
    stack = elementary_influence_maps(g, args.layer, n_pairs=args.pairs, seed=args.seed, workers=args.workers)
    save_eims(stack, args.out)
    if args.png:
        write_montage_png(args.png, list(stack.maps()), columns=min(8, stack.rows.shape[0]))
    print(f"wrote {stack.rows.shape[0]} maps ({stack.height}x{stack.width}, {args.pairs} pairs) to {args.out}")
    return 0


def cmd_cluster(args) -> int:
    _ensure_parent(args.out)
    stack = load_eims(args.eims)
    binary = preprocess_maps(stack, window=args.window, percentile=args.percentile)
    model = fit_clusters(binary.rows, args.k, method=args.method, seed=args.seed)
    labels = assign_clusters(model)
    prov = _provenance(
        "cluster",
        {
            "eims": Path(args.eims).name,
            "k": args.k,
            "method": args.method,
            "percentile": args.percentile,
            "seed": args.seed,
            "window": args.window,
        },
    )
    write_csv(args.out, ["row", "cluster"], list(enumerate(int(v) for v in labels)), prov)
    sizes = [int((labels == j).sum()) for j in range(args.k)]
    print(f"wrote assignments to {args.out}; cluster sizes {sizes}")
    return 0


def cmd_stability(args) -> int:
    _ensure_parent(args.out)
    stack = load_eims(args.eims)
    binary = preprocess_maps(stack, window=args.window, percentile=args.percentile)
    k_values = _parse_int_list(args.k)
    methods = ["nmf", "kmeans"] if args.method == "both" else [args.method]
    prov = _provenance(
        "stability",
        {
            "eims": Path(args.eims).name,
            "k": args.k,
            "method": args.method,
            "percentile": args.percentile,
            "reps": args.reps,
            "seed": args.seed,
            "window": args.window,
        },
    )
    rows = []
    for method in methods:
        report = stability_analysis(binary.rows, k_values, reps=args.reps, seed=args.seed, method=method)
        for e in report.entries:
            rows.append((method, e.k, e.consistency_mean, e.consistency_std, e.cosine_mean, e.cosine_std))
            print(
                f"{method} K={e.k}: consistency {e.consistency_mean:.3f} (std {e.consistency_std:.3f}), "
                f"template cosine {e.cosine_mean:.3f} (std {e.cosine_std:.3f})"
            )
    write_csv(
        args.out,
        ["method", "k", "consistency_mean", "consistency_std", "cosine_mean", "cosine_std"],
        rows,
        prov,
    )
    print(f"wrote stability table to {args.out}")
    return 0


def cmd_influence_stats(args) -> int:
    _ensure_parent(args.out, args.regression_out)
    g = load_model(args.manifest, args.blob)
    stack = elementary_influence_maps(g, args.layer, n_pairs=args.pairs, seed=args.seed, workers=args.workers)
    binary = preprocess_maps(stack, window=args.window, percentile=args.percentile)
    sel = verified_layer(g, args.layer)
    k_values = _parse_int_list(args.k)
    rows = []
    points = []
    for k in k_values:
        model = fit_clusters(binary.rows, k, method=args.method, seed=Stream(args.seed).child_seed(f"fit:{k}"))
        labels = assign_clusters(model)
        modules = [[sel.variables[i] for i in np.flatnonzero(labels == j)] for j in range(k)]
        maps = module_influence_maps(g, args.layer, modules, n_pairs=args.pairs, seed=args.seed, workers=args.workers)
        for j, m in enumerate(maps):
            size = len(modules[j])
            infl = individual_influence(m) if size else 0.0
            rows.append((k, j, size, infl))
            if size:
                points.append((size, infl))
    prov = _provenance(
        "influence-stats",
        {
            "k": args.k,
            "layer": args.layer,
            "manifest": Path(args.manifest).name,
            "method": args.method,
            "pairs": args.pairs,
            "percentile": args.percentile,
            "seed": args.seed,
            "window": args.window,
            "workers": args.workers,
        },
    )
    write_csv(args.out, ["k", "cluster", "channel_count", "individual_influence"], rows, prov)
    reg = influence_size_regression(points)
    print(
        f"influence vs module size: slope {reg.slope:.6f}, intercept {reg.intercept:.6f}, "
        f"r_squared {reg.r_squared:.4f} over {reg.n_points} modules"
    )
    if args.regression_out:
        write_csv(
            args.regression_out,
            ["layer", "slope", "intercept", "r_squared", "n_points"],
            [(args.layer, reg.slope, reg.intercept, reg.r_squared, reg.n_points)],
            prov,
        )
    print(f"wrote per-module influence table to {args.out}")
    return 0


def cmd_check_layer(args) -> int:
    g = load_model(args.manifest, args.blob)
    if args.layer not in g.layers:
        raise ValidationError(f"model defines no layer named {args.layer!r}; has {sorted(g.layers)}")
    check = is_layer(g, args.layer)
    if check.status == "yes":
        print(f"yes: {args.layer!r} intercepts every latent-output path and is minimal")
    elif check.status == "no":
        path = " -> ".join(f"{ref}:{c}" for ref, c in check.witness_path or [])
        print(f"no: path escapes the candidate: {path}")
    else:
        ref, c = check.removable or ("?", -1)
        print(f"not minimal: variable {ref}:{c} can be removed")
    return 0


def cmd_check_ancestors(args) -> int:
    g = load_model(args.manifest, args.blob)
    sel = verified_layer(g, args.layer)
    indices = _parse_channel_spec(args.channels, len(sel.variables))
    part = [sel.variables[i] for i in indices]
    anc = sorted(latent_ancestors(g, part))
    print(f"latent ancestors of {len(part)} variables in {args.layer!r}: {anc}")
    if args.against_rest:
        shared = shares_latent_ancestor(g, part, sel)
        print(f"shares a latent ancestor with the rest of the layer: {shared}")
    return 0


# -- argument plumbing -------------------------------------------------------


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", default=None, help="model manifest (JSON)")
    p.add_argument("--blob", default=None, help="weight blob; defaults to the manifest's weights_file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genlens", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="JSON file with default option values")
    parser.add_argument("--version", action="version", version=f"genlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-model", help="build a seeded or planted model and save it")
    p.add_argument("--arch", default=None, choices=list_architectures(), help="seeded architecture name")
    p.add_argument("--planted", action="store_true", help="build the block-planted generator instead")
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--latents-per-block", type=int, default=4)
    p.add_argument("--channels-per-block", type=int, default=8)
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--layout", default="bands", choices=["bands", "quadrants"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-manifest", default=None)
    p.add_argument("--out-blob", default=None)
    p.add_argument("--out-partition", default=None, help="write the planted ground-truth partition CSV here")
    p.set_defaults(func=cmd_make_model, _required=["out_manifest"])

    p = sub.add_parser("gen", help="sample latents and render images")
    _add_model_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--latents", default=None, help="CSV of latent rows to use instead of sampling")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--save-raw", action="store_true", help="also write samples.npy")
    p.set_defaults(func=cmd_gen, _required=["manifest", "out_dir"])

    p = sub.add_parser("hybrid", help="hybridize latent pairs over a module")
    _add_model_args(p)
    p.add_argument("--layer", default=None)
    p.add_argument("--channels", default=None, help="layer variable indices, e.g. 0-7 or 0,3,9 or all")
    p.add_argument("--module", default=None, help="cluster:N, resolved through --clusters")
    p.add_argument("--clusters", default=None, help="assignment CSV from the cluster command")
    p.add_argument("--pairs", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--save-raw", action="store_true", help="also write hybrids.npy")
    p.set_defaults(func=cmd_hybrid, _required=["manifest", "layer", "out_dir"])

    p = sub.add_parser("eim", help="per-channel influence maps of a layer")
    _add_model_args(p)
    p.add_argument("--layer", default=None)
    p.add_argument("--pairs", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output map stack (EIMS)")
    p.add_argument("--png", default=None, help="optional montage of the maps")
    p.set_defaults(func=cmd_eim, _required=["manifest", "layer", "out"])

    p = sub.add_parser("cluster", help="group layer channels from their maps")
    p.add_argument("--eims", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--method", default="nmf", choices=["nmf", "kmeans"])
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--percentile", type=float, default=75.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="assignment CSV (row, cluster)")
    p.set_defaults(func=cmd_cluster, _required=["eims", "k", "out"])

    p = sub.add_parser("stability", help="cluster stability across overlapping splits")
    p.add_argument("--eims", default=None)
    p.add_argument("--k", default="2..6", help="K values: 4, 2..6, or 2,4,8")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--method", default="both", choices=["nmf", "kmeans", "both"])
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--percentile", type=float, default=75.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stability, _required=["eims", "out"])

    p = sub.add_parser("influence-stats", help="module influences and the size regression")
    _add_model_args(p)
    p.add_argument("--layer", default=None)
    p.add_argument("--k", default="2..6")
    p.add_argument("--method", default="nmf", choices=["nmf", "kmeans"])
    p.add_argument("--pairs", type=int, default=256)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--percentile", type=float, default=75.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--regression-out", default=None)
    p.set_defaults(func=cmd_influence_stats, _required=["manifest", "layer", "out"])

    p = sub.add_parser("check-layer", help="is a named variable set a minimal separator?")
    _add_model_args(p)
    p.add_argument("--layer", default=None)
    p.set_defaults(func=cmd_check_layer, _required=["manifest", "layer"])

    p = sub.add_parser("check-ancestors", help="latent ancestors of part of a layer")
    _add_model_args(p)
    p.add_argument("--layer", default=None)
    p.add_argument("--channels", default=None)
    p.add_argument("--against-rest", action="store_true",
                   help="also report whether the part shares an ancestor with the rest of the layer")
    p.set_defaults(func=cmd_check_ancestors, _required=["manifest", "layer", "channels"])

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise ValidationError("config file must hold a JSON object")
        # a config value fills any option the command line left at its default
        given = _explicit_dests(argv)
        for key, value in config.items():
            dest = key.replace("-", "_")
            if hasattr(args, dest) and dest not in given and dest not in ("command", "func", "config"):
                setattr(args, dest, value)
    for dest in getattr(args, "_required", []):
        if getattr(args, dest) is None:
            flag = "--" + dest.replace("_", "-")
            raise ValidationError(f"{args.command}: {flag} is required (on the command line or in the config)")
    return args


def _explicit_dests(argv: list[str]) -> set[str]:
    out = set()
    for token in argv:
        if token.startswith("--"):
            out.add(token[2:].split("=", 1)[0].replace("-", "_"))
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GenlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
