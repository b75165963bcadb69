"""Deterministic causal-graph engine for inspecting generative image models.

The package treats a generator as a causal graph of float32 structural
equations, supports recorded-value interventions and hybridization between
latent samples, estimates per-channel influence maps, and groups channels
into modules by factoring those maps.  Every computation is reproducible
from integer seeds, down to the byte.
"""

from .clustering import (
    ClusterModel,
    NmfFit,
    StabilityReport,
    assign_clusters,
    fit_clusters,
    kmeans,
    match_labelings,
    nmf,
    nmf_fit,
    preprocess_maps,
    stability_analysis,
)
from .errors import GenlensError, GraphError, ManifestError, ShapeError, ValidationError
from .factories import ARCHITECTURES, PlantedModel, make_planted_generator, make_seeded_generator, make_toy_linear
from .graph import (
    CgmGraph,
    LatentSpec,
    LayerCheck,
    LayerSel,
    Node,
    build_graph,
    evaluate,
    evaluate_from_layer,
    injectivity_probe,
    is_layer,
    latent_ancestors,
    shares_latent_ancestor,
)
from .influence import (
    EimStack,
    InfluenceMap,
    elementary_influence_maps,
    individual_influence,
    influence_map,
    influence_size_regression,
    module_influence_maps,
)
from .interventions import Intervention, ModuleSel, apply_latent_transform, counterfactual, hybridize, intervene
from .modelio import (
    load_eims,
    load_model,
    read_csv,
    save_eims,
    save_model,
    write_csv,
    write_montage_png,
    write_png,
)
from .rng import Stream

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "CgmGraph",
    "ClusterModel",
    "EimStack",
    "GenlensError",
    "GraphError",
    "InfluenceMap",
    "Intervention",
    "LatentSpec",
    "LayerCheck",
    "LayerSel",
    "ManifestError",
    "ModuleSel",
    "NmfFit",
    "Node",
    "PlantedModel",
    "ShapeError",
    "StabilityReport",
    "Stream",
    "ValidationError",
    "apply_latent_transform",
    "assign_clusters",
    "build_graph",
    "counterfactual",
    "elementary_influence_maps",
    "evaluate",
    "evaluate_from_layer",
    "fit_clusters",
    "hybridize",
    "individual_influence",
    "influence_map",
    "influence_size_regression",
    "injectivity_probe",
    "intervene",
    "is_layer",
    "kmeans",
    "latent_ancestors",
    "load_eims",
    "load_model",
    "make_planted_generator",
    "make_seeded_generator",
    "make_toy_linear",
    "match_labelings",
    "module_influence_maps",
    "nmf",
    "nmf_fit",
    "preprocess_maps",
    "read_csv",
    "save_eims",
    "save_model",
    "shares_latent_ancestor",
    "stability_analysis",
    "write_csv",
    "write_montage_png",
    "write_png",
]
