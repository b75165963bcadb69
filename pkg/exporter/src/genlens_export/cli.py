"""Command line interface for checkpoint export."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .export import ExportError, ExportSpec, export_checkpoint
from .models import ARCHITECTURES


def _load_mapping(path: str) -> dict[str, str | None]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ExportError(f"mapping file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ExportError("mapping file must hold a JSON object of source-to-target names")
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genlens-export",
        description="Convert a torch generator checkpoint into the manifest+blob model format.",
    )
    parser.add_argument("--checkpoint", required=True, help="torch state-dict file (.pt)")
    parser.add_argument("--arch", required=True, choices=sorted(ARCHITECTURES),
                        help="architecture the checkpoint holds")
    parser.add_argument("--out-manifest", required=True, help="manifest JSON to write")
    parser.add_argument("--out-blob", default=None,
                        help="weight blob to write; defaults to the manifest path with .cgmb")
    parser.add_argument("--out-parity", default=None,
                        help="parity file to write; defaults to <manifest stem>.parity.cgmb")
    parser.add_argument("--mapping", default=None,
                        help="JSON object remapping checkpoint tensor names (null drops a tensor)")
    parser.add_argument("--parity-seed", type=int, default=0)
    parser.add_argument("--parity-count", type=int, default=8)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = ExportSpec(
            checkpoint=args.checkpoint,
            arch=args.arch,
            out_manifest=args.out_manifest,
            out_blob=args.out_blob,
            out_parity=args.out_parity,
            mapping=_load_mapping(args.mapping) if args.mapping else None,
            parity_seed=args.parity_seed,
            parity_count=args.parity_count,
        )
        result = export_checkpoint(spec)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.tensor_count} tensors to {result.blob_path}")
    print(f"wrote manifest to {result.manifest_path}")
    print(f"wrote {result.parity_count} parity pairs to {result.parity_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
