"""Hybridization gallery on a seeded convolutional generator.

Clusters one level of a randomly initialized generator into K modules,
then renders (original, donor, hybrid) triples where the largest module's
channels are transplanted from the donor pass into the original pass.
With random weights the images are textures, not faces, but the hybrids
still show the point: only the regions that module paints change.
Outputs land in demos/output/.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from genlens import (
    ModuleSel,
    Stream,
    assign_clusters,
    elementary_influence_maps,
    fit_clusters,
    hybridize,
    make_seeded_generator,
    preprocess_maps,
    write_montage_png,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

g = make_seeded_generator("gan_cifar", seed=7)
layer = "level1"
sel = g.layers[layer]
print(f"gan_cifar seed 7: {len(sel.variables)} channels in {layer!r}, 16x16 output")

print("estimating per-channel influence maps (64 pairs) ...")
stack = elementary_influence_maps(g, layer, n_pairs=64, seed=3)
binary = preprocess_maps(stack, window=3, percentile=75.0)
labels = assign_clusters(fit_clusters(binary.rows, 4, method="nmf", seed=1))
sizes = [int((labels == j).sum()) for j in range(4)]
biggest = int(np.argmax(sizes))
module = ModuleSel(layer, [sel.variables[i] for i in np.flatnonzero(labels == biggest)])
print(f"K=4 cluster sizes {sizes}; hybridizing cluster {biggest} ({sizes[biggest]} channels)")

stream = Stream(21).child("gallery")
z1s = stream.latents(g.latent.intervals, g.latent.distribution, 6)
z2s = stream.latents(g.latent.intervals, g.latent.distribution, 6)
tiles = []
for z1, z2 in zip(z1s, z2s):
    hybrid, orig1, orig2 = hybridize(g, module, z1, z2)
    diff = np.abs(hybrid - orig1).mean(axis=0, keepdims=True)
    peak = float(diff.max())
    shown = diff / peak if peak > 0 else diff
    tiles.extend([orig1, orig2, hybrid, np.repeat(shown, orig1.shape[0], axis=0)])
    print(f"  mean |hybrid - original| = {float(diff.mean()):.4f} (peak {peak:.4f})")

write_montage_png(out_dir / "hybrid_gallery.png", tiles, columns=4)
print(f"wrote {out_dir / 'hybrid_gallery.png'}")
print("columns: original, donor, hybrid, |difference| rescaled to full range per row")
