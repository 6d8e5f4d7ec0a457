"""Stochastic embeddings of genus-g embedded graphs into trees and planar graphs."""

from .cut_graph import (
    CutGraph,
    PathSystem,
    decompose_into_paths,
    default_root,
    greedy_system_of_loops,
    shortest_path_tree,
    verify_disk_certificate,
)
from .harness import (
    DistortionReport,
    GeneratorSpec,
    bruteforce_expectation_oracle,
    empirical_distortion,
    generate,
    report_to_csv,
    shortest_distances,
    tree_path_system,
)
from .partitions import (
    PartitionHierarchy,
    PathMetrics,
    RandomnessRecord,
    build_hierarchy,
    rescale_min_distance,
    subdivide_long_path_edges,
)
from .planarization import (
    PlanarizationSample,
    assign_portals,
    assemble_one_sum,
    build_clique_and_residue,
    dilation,
    kpr_hierarchy,
    planarize,
    subdivide_boundary_edges,
)
from .surface_map import (
    Dart,
    EmbeddedGraph,
    FaceSet,
    cut_along,
    emit_graph,
    euler_genus,
    induced_embedded_subgraph,
    load_graph,
    parse_graph,
    save_graph,
    trace_faces,
    validate_map,
)
from .tree_embedding import (
    EmbedTree,
    build_tree,
    extend_to_attachments,
    sample_tree_embedding,
)

__all__ = [
    "CutGraph",
    "Dart",
    "DistortionReport",
    "EmbedTree",
    "EmbeddedGraph",
    "FaceSet",
    "GeneratorSpec",
    "PartitionHierarchy",
    "PathMetrics",
    "PathSystem",
    "PlanarizationSample",
    "RandomnessRecord",
    "assemble_one_sum",
    "assign_portals",
    "build_clique_and_residue",
    "build_hierarchy",
    "build_tree",
    "bruteforce_expectation_oracle",
    "cut_along",
    "decompose_into_paths",
    "default_root",
    "dilation",
    "emit_graph",
    "empirical_distortion",
    "euler_genus",
    "extend_to_attachments",
    "generate",
    "greedy_system_of_loops",
    "induced_embedded_subgraph",
    "kpr_hierarchy",
    "load_graph",
    "parse_graph",
    "planarize",
    "report_to_csv",
    "rescale_min_distance",
    "sample_tree_embedding",
    "save_graph",
    "shortest_distances",
    "shortest_path_tree",
    "subdivide_boundary_edges",
    "subdivide_long_path_edges",
    "trace_faces",
    "tree_path_system",
    "validate_map",
]
