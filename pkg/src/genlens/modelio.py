"""File formats: model manifests, weight blobs, map stacks, PNGs, CSVs.

These formats are the contract between this package and external tools that
produce or consume models, so they are fully specified here.

Manifest (JSON): {"format": "cgm-manifest", "version": 1, "latent": {...},
"nodes": [...], "output": name, "layers": {name: [[node, channel], ...]},
"weights_file": basename}.  Node entries carry op, parents, params, and a
role-to-key table into the weight blob.

Weight blob (CGMB): magic b"CGMB", u32 version, u32 tensor count, then one
table entry per tensor (u16 name length, utf-8 name, u8 dtype code with 0 =
float32, u8 ndim, u32 dims, u64 byte offset into the payload), then the
payload (little-endian float32, tensors in lexicographic name order), then
a u32 CRC-32 of every preceding byte.  Lexicographic order makes re-saves
byte-identical.

Map stack (EIMS): magic b"EIMS", u32 version, u16 layer-name length, utf-8
layer name, u32 rows, u32 H, u32 W, u64 seed, u32 n_pairs, then row-major
float32 little-endian map data, one map per layer variable in layer order.

All numbers little-endian.  CSV files start with one '# '-prefixed
provenance line (tool version, seed, command; never a timestamp) so reruns
are byte-identical; the reader returns that line alongside the rows.
"""

from __future__ import annotations

import csv
import io
import json
import struct
import zlib
from pathlib import Path

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .errors import ManifestError
from .graph import CgmGraph, LatentSpec, Node, build_graph
from .influence import EimStack

MANIFEST_FORMAT = "cgm-manifest"
MANIFEST_VERSION = 1
BLOB_MAGIC = b"CGMB"
BLOB_VERSION = 1
EIMS_MAGIC = b"EIMS"
EIMS_VERSION = 1
_DTYPE_F32 = 0


# -- weight blobs -----------------------------------------------------------


def dump_weights(weights: dict[str, np.ndarray]) -> bytes:
    """Serialize a name-to-tensor dict as CGMB bytes."""
    names = sorted(weights)
    table = io.BytesIO()
    payload = io.BytesIO()
    for name in names:
        arr = np.asarray(weights[name], dtype="<f4", order="C")
        raw = name.encode("utf-8")
        table.write(struct.pack("<H", len(raw)))
        table.write(raw)
        table.write(struct.pack("<BB", _DTYPE_F32, arr.ndim))
        table.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        table.write(struct.pack("<Q", payload.tell()))
        payload.write(arr.tobytes(order="C"))
    body = BLOB_MAGIC + struct.pack("<II", BLOB_VERSION, len(names)) + table.getvalue() + payload.getvalue()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def parse_weights(data: bytes) -> dict[str, np.ndarray]:
    """Parse CGMB bytes, verifying structure and checksum."""
    if len(data) < 16 or data[:4] != BLOB_MAGIC:
        raise ManifestError("not a CGMB weight blob (bad magic)")
    (crc_stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != crc_stored:
        raise ManifestError("CGMB checksum mismatch: blob truncated or corrupted")
    version, count = struct.unpack("<II", data[4:12])
    if version != BLOB_VERSION:
        raise ManifestError(f"unsupported CGMB version {version}")
    pos = 12
    entries: list[tuple[str, tuple[int, ...], int]] = []
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + nlen].decode("utf-8")
            pos += nlen
            dtype_code, ndim = struct.unpack_from("<BB", data, pos)
            pos += 2
            if dtype_code != _DTYPE_F32:
                raise ManifestError(f"tensor {name!r} has unsupported dtype code {dtype_code}")
            shape = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            (offset,) = struct.unpack_from("<Q", data, pos)
            pos += 8
            entries.append((name, shape, offset))
    except struct.error as exc:
        raise ManifestError(f"truncated CGMB table: {exc}") from exc
    payload = data[pos:-4]
    out: dict[str, np.ndarray] = {}
    for name, shape, offset in entries:
        if name in out:
            raise ManifestError(f"duplicate tensor {name!r} in blob")
        nbytes = 4 * int(np.prod(shape, dtype=np.int64)) if shape else 4
        if offset + nbytes > len(payload):
            raise ManifestError(f"tensor {name!r} extends past end of blob payload")
        arr = np.frombuffer(payload, dtype="<f4", count=nbytes // 4, offset=offset)
        out[name] = arr.reshape(shape).astype(np.float32)
    return out


# -- manifests --------------------------------------------------------------


def graph_to_manifest(g: CgmGraph, weights_file: str) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "latent": {
            "count": g.latent.count,
            "distribution": g.latent.distribution,
            "intervals": [[float(lo), float(hi)] for lo, hi in g.latent.intervals],
        },
        "nodes": [
            {"name": n.name, "op": n.op, "parents": list(n.parents), "params": n.params, "weights": n.weights}
            for n in g.nodes.values()
        ],
        "output": g.output,
        "layers": {name: [[ref, c] for ref, c in sel.variables] for name, sel in g.layers.items()},
        "weights_file": weights_file,
    }


def manifest_to_graph(manifest: dict, weights: dict[str, np.ndarray]) -> CgmGraph:
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"not a {MANIFEST_FORMAT} document")
    if manifest.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {manifest.get('version')!r}")
    try:
        lat = manifest["latent"]
        latent = LatentSpec(
            intervals=np.asarray(lat["intervals"], dtype=np.float32).reshape(-1, 2),
            distribution=lat["distribution"],
        )
        if latent.count != int(lat["count"]):
            raise ManifestError("latent count disagrees with interval list length")
        nodes = [
            Node(
                name=d["name"],
                op=d["op"],
                parents=list(d["parents"]),
                params=dict(d.get("params", {})),
                weights=dict(d.get("weights", {})),
            )
            for d in manifest["nodes"]
        ]
        layers = {
            name: [(ref, int(c)) for ref, c in var_list]
            for name, var_list in manifest.get("layers", {}).items()
        }
        output = manifest["output"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"malformed manifest: {exc!r}") from exc
    return build_graph(latent, nodes, output, weights, layers)


def save_model(g: CgmGraph, manifest_path: str | Path, blob_path: str | Path | None = None) -> None:
    manifest_path = Path(manifest_path)
    blob_path = Path(blob_path) if blob_path else manifest_path.with_suffix(".cgmb")
    blob_path.write_bytes(dump_weights(g.weights))
    manifest = graph_to_manifest(g, weights_file=blob_path.name)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_model(manifest_path: str | Path, blob_path: str | Path | None = None) -> CgmGraph:
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict):
        raise ManifestError("manifest must be a JSON object")
    if blob_path is None:
        blob_path = manifest_path.parent / manifest.get("weights_file", manifest_path.stem + ".cgmb")
    weights = parse_weights(Path(blob_path).read_bytes())
    return manifest_to_graph(manifest, weights)


# -- map stacks -------------------------------------------------------------


def dump_eims(stack: EimStack) -> bytes:
    name = stack.layer.encode("utf-8")
    rows = np.ascontiguousarray(stack.rows, dtype="<f4")
    header = EIMS_MAGIC + struct.pack("<IH", EIMS_VERSION, len(name)) + name
    header += struct.pack("<IIIQI", rows.shape[0], stack.height, stack.width, stack.seed, stack.n_pairs)
    return header + rows.tobytes(order="C")


def parse_eims(data: bytes) -> EimStack:
    if len(data) < 10 or data[:4] != EIMS_MAGIC:
        raise ManifestError("not an EIMS map file (bad magic)")
    version, nlen = struct.unpack_from("<IH", data, 4)
    if version != EIMS_VERSION:
        raise ManifestError(f"unsupported EIMS version {version}")
    pos = 10
    layer = data[pos : pos + nlen].decode("utf-8")
    pos += nlen
    try:
        rows_n, height, width, seed, n_pairs = struct.unpack_from("<IIIQI", data, pos)
    except struct.error as exc:
        raise ManifestError(f"truncated EIMS header: {exc}") from exc
    pos += 24
    want = rows_n * height * width * 4
    if len(data) - pos != want:
        raise ManifestError(f"EIMS payload is {len(data) - pos} bytes, header implies {want}")
    rows = np.frombuffer(data, dtype="<f4", count=want // 4, offset=pos)
    return EimStack(
        rows=rows.reshape(rows_n, height * width).astype(np.float32),
        layer=layer,
        height=height,
        width=width,
        seed=seed,
        n_pairs=n_pairs,
    )


def save_eims(stack: EimStack, path: str | Path) -> None:
    Path(path).write_bytes(dump_eims(stack))


def load_eims(path: str | Path) -> EimStack:
    return parse_eims(Path(path).read_bytes())


# -- images -----------------------------------------------------------------


def to_u8_image(x: np.ndarray, lo: float | None = None, hi: float | None = None) -> tuple[np.ndarray, float, float]:
    """Linear map to 8-bit; returns (pixels, lo, hi) so the scale is known."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim == 3 and x.shape[0] == 1:
        x = x[0]
    if x.ndim == 3 and x.shape[0] == 3:
        x = np.transpose(x, (1, 2, 0))
    elif x.ndim != 2:
        raise ManifestError(f"cannot render shape {x.shape} as an image (need (H,W), (1,H,W) or (3,H,W))")
    lo = float(x.min()) if lo is None else float(lo)
    hi = float(x.max()) if hi is None else float(hi)
    if hi <= lo:
        u8 = np.zeros(x.shape, np.uint8)
    else:
        u8 = np.clip(np.rint((x - lo) / (hi - lo) * 255.0), 0, 255).astype(np.uint8)
    return u8, lo, hi


def write_png(path: str | Path, x: np.ndarray, lo: float | None = None, hi: float | None = None) -> None:
    """8-bit PNG with the linear scale recorded in tEXt metadata."""
    u8, lo, hi = to_u8_image(x, lo, hi)
    meta = PngInfo()
    meta.add_text("genlens:scale_lo", repr(lo))
    meta.add_text("genlens:scale_hi", repr(hi))
    Image.fromarray(u8).save(Path(path), format="PNG", pnginfo=meta)


def montage(tiles: list[np.ndarray], columns: int, gap: int = 2) -> np.ndarray:
    """Grid of equal-shaped tiles on a shared linear scale, row-major.

    Returns a float array (grayscale tiles) or (3, H, W)-style stacking is
    preserved by converting every tile to HxWxC internally.
    """
    if not tiles:
        raise ManifestError("montage needs at least one tile")
    lo = min(float(np.min(t)) for t in tiles)
    hi = max(float(np.max(t)) for t in tiles)
    converted = [to_u8_image(t, lo, hi)[0] for t in tiles]
    shape = converted[0].shape
    if any(c.shape != shape for c in converted):
        raise ManifestError("montage tiles must share one shape")
    rows = (len(converted) + columns - 1) // columns
    h, w = shape[0], shape[1]
    channels = shape[2:] if len(shape) == 3 else ()
    canvas = np.zeros((rows * h + gap * (rows - 1), columns * w + gap * (columns - 1)) + channels, np.uint8)
    for i, tile in enumerate(converted):
        r, c = divmod(i, columns)
        canvas[r * (h + gap) : r * (h + gap) + h, c * (w + gap) : c * (w + gap) + w] = tile
    return canvas


def write_montage_png(path: str | Path, tiles: list[np.ndarray], columns: int, gap: int = 2) -> None:
    Image.fromarray(montage(tiles, columns, gap)).save(Path(path), format="PNG")


# -- CSV --------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, header: list[str], rows: list, provenance: str | None = None) -> None:
    """CSV with a leading '# ' provenance comment; stable float formatting."""
    with open(Path(path), "w", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]], str | None]:
    """Inverse of write_csv: returns (header, rows, provenance-or-None)."""
    provenance = None
    with open(Path(path), newline="") as fh:
        first = fh.readline()
        if first.startswith("# "):
            provenance = first[2:].rstrip("\n")
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    return header, rows, provenance
