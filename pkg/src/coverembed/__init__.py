"""Manifold learning factored into clustering functors and loss construction.

A pseudometric space is clustered at every distance scale into a hierarchical
overlapping cover; the cover's pairwise membership strengths become a
pairwise embedding loss; a deterministic optimizer produces coordinates.
"""

from .metric import (
    PseudometricSpace,
    from_matrix,
    from_points_euclidean,
    from_sequences_hamming,
    isometry_epsilon,
)
from .covers import (
    Cover,
    HierarchicalCover,
    MembershipMatrix,
    cover_at,
    is_flag_cover,
    make_cover,
    membership_matrix,
    refines,
    target_distances,
)
from .functors import (
    fuzzy_simplex,
    fuzzy_union_membership,
    geodesic_metric,
    iso_cluster,
    l_k_linkage,
    maximal_linkage,
    single_linkage,
    vl_k_linkage,
)
from .loss import (
    FuzzyLossFamily,
    GridSpec,
    LossObject,
    QuadratureSettings,
    fce_problem,
    flatten,
    loss_leq,
    mds_fuzzy_family,
    mds_stress_problem,
    sign_classification,
)
from .optimize import (
    Embedding,
    OptimizerConfig,
    classical_mds_init,
    grad_check,
    jacobi_eigh,
    minimize,
)
from .algorithms import (
    PipelineSpec,
    isomap,
    k_path_scaling,
    k_vertex_scaling,
    mds_fuzzy,
    metric_mds,
    run_pipeline,
    single_linkage_scaling,
    umap_simplified,
)
from .stability import (
    check_interleaving_bound,
    check_loss_transfer,
    interleaving_distance,
)
from .dna import BenchConfig, accuracy, generate, run_bench
from .errors import DisconnectedError, NumericalError, ValidationError

__version__ = "0.1.0"
