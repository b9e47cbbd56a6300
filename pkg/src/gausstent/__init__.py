"""Gaussian tent spaces on a truncated lattice.

Admissible balls and the layered dyadic grid, Whitney-type coverings of
open sets with admissible cubes, discretized tent-space norms, a
constructive atomic decomposition, and change-of-aperture comparisons.
Everything is finite and checkable: each construction ships with the
verification routine that certifies its defining inequalities.
"""

from .geometry import (
    AdmissibleBall,
    Box,
    MeasureEstimate,
    ToleranceError,
    admissibility_radius,
    ball_measure_value,
    ball_measures_1d,
    box_measure_value,
    doubling_ratio_sample,
    gaussian_measure_ball,
    interval_gamma_1d,
    is_admissible,
    m_from_norms,
    sample_truncated_gaussian,
)
from .grid import (
    CubeLabel,
    GaussianCube,
    LabelClass,
    count_in_layer,
    cube_of,
    cubes_in_layer,
    label_class,
    label_of,
    layer_cube_indices,
    layer_of,
    layers_of,
    max_layer_touching,
    min_layer_for_labels,
)
from .whitney import (
    CoverPiece,
    PartitionError,
    RegionMask,
    WhitneyCertificate,
    WhitneyPartition,
    cover_count_bound,
    cover_open_set,
    grid_slack,
    separation_check,
    thicken,
    thickened_contains,
    whitney_check,
    whitney_partition,
)
from .tent import (
    AtomRecord,
    DGrid,
    NormConfig,
    TentFunction,
    apply_J,
    ball_tent_pairs,
    density_set,
    holder_chain_report,
    j_power_field,
    lq_norm_D,
    make_atom,
    maximal_function,
    region_pair_mask,
    session_eta_bar,
    t1q_norm,
    tent_pair_mask,
    verify_atom_norm,
    verify_density_averaging,
)
from .atomic import (
    ApertureReport,
    CoverageError,
    Decomposition,
    DecompositionTerm,
    StoppingLadder,
    aperture_compare,
    atomic_decompose,
    ladder_thicken_check,
    reatom,
    stopping_ladder,
    support_splitter,
    verify_decomposition,
)
from .cli import SessionConfig, run_verify_all

__all__ = [
    "AdmissibleBall",
    "ApertureReport",
    "AtomRecord",
    "Box",
    "CoverPiece",
    "CoverageError",
    "CubeLabel",
    "DGrid",
    "Decomposition",
    "DecompositionTerm",
    "GaussianCube",
    "LabelClass",
    "MeasureEstimate",
    "NormConfig",
    "PartitionError",
    "RegionMask",
    "SessionConfig",
    "StoppingLadder",
    "TentFunction",
    "ToleranceError",
    "WhitneyCertificate",
    "WhitneyPartition",
    "admissibility_radius",
    "aperture_compare",
    "apply_J",
    "atomic_decompose",
    "ball_measure_value",
    "ball_measures_1d",
    "ball_tent_pairs",
    "box_measure_value",
    "count_in_layer",
    "cover_count_bound",
    "cover_open_set",
    "cube_of",
    "cubes_in_layer",
    "density_set",
    "doubling_ratio_sample",
    "gaussian_measure_ball",
    "grid_slack",
    "holder_chain_report",
    "interval_gamma_1d",
    "is_admissible",
    "j_power_field",
    "label_class",
    "label_of",
    "ladder_thicken_check",
    "layer_cube_indices",
    "layer_of",
    "layers_of",
    "lq_norm_D",
    "m_from_norms",
    "make_atom",
    "max_layer_touching",
    "maximal_function",
    "min_layer_for_labels",
    "reatom",
    "region_pair_mask",
    "run_verify_all",
    "sample_truncated_gaussian",
    "separation_check",
    "session_eta_bar",
    "stopping_ladder",
    "support_splitter",
    "t1q_norm",
    "tent_pair_mask",
    "thicken",
    "thickened_contains",
    "verify_atom_norm",
    "verify_decomposition",
    "verify_density_averaging",
    "whitney_check",
    "whitney_partition",
]
