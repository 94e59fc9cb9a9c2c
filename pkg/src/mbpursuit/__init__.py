"""Sparse recovery via multi-branch matching pursuit.

A tree-search generalization of rank-aware matching pursuit for single- and
multiple-snapshot problems, the coherence-based certificates that guarantee
its success, branch-vector design, steering-dictionary generation for
MIMO-radar direction finding, and a reproducible Monte Carlo harness.
"""

from .dictionary import (
    ArrayGeometry,
    Dictionary,
    babel,
    coherence,
    direction_grid,
    gaussian_dictionary,
    mimo_radar_dictionary,
    normalize_columns,
    random_geometry,
    spark_exceeds,
    steering_column,
)
from .guarantees import (
    CertificateReport,
    OIRValue,
    coherence_condition,
    cumulative_coherence_condition,
    design_branch_vector,
    mb_coherence,
    mb_erc,
    neuman_erc,
    oir,
    refined_columns,
    smallest_d_bruteforce,
    smallest_d_mip,
)
from .harness import (
    ExperimentConfig,
    Observations,
    TargetScene,
    TrialOutcome,
    add_noise,
    beamform_smv,
    generate_scene,
    music_discrete,
    parse_experiment_config,
    run_condition_sweep,
    run_experiment,
    run_recovery_sweep,
    scene_snapshots,
    support_error,
    wilson_interval,
)
from .matio import load_matrix, save_matrix
from .numlin import least_squares, orthonormal_basis, project_out
from .pursuit import (
    BranchVector,
    NodeState,
    PursuitConfig,
    RecoveryResult,
    d_max,
    exhaustive_l0,
    mbmp,
    node_count,
    refine_atom,
    selection_margin,
)

__version__ = "0.1.0"
