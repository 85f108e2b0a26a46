"""Numerical tools for linear maps that preserve separability, built around
Schmidt-rank norms and the detection of local (product or swapped) forms.

Party indices in the Python API are 0-based; the command line counts from 1.
"""

__version__ = "0.1.0"

from .errors import (
    AmbiguousSubsystem,
    HypothesisFailure,
    InvertibilityUnknown,
    MultipleKrausDirections,
    NotCompletelyPositive,
    NotIsometry,
    NotSeparabilityPreserving,
    SepPresError,
    ShapeError,
    ViolationWitnessed,
)
from .multipartite import (
    FactorList,
    GmeResult,
    RecoveredForm,
    gme,
    gme_invariance_check,
    is_product_state,
    recover_local_form_multipartite,
    separable_sum_test,
)
from .oracles import OracleConfig, SearchReport, brute_force_S_norm, rank_one_sum_property
from .preservers import (
    IsometryDecomposition,
    KrausSet,
    LocalFormReport,
    PreservationReport,
    check_schmidt_rank_preservation,
    choi_kraus,
    classify_cp_sk_preserver,
    classify_local_form,
    classify_norm_isometry,
    operator_schmidt_split,
    sep_isometry_implies_unitary_check,
    verify_thm_main,
)
from .schmidt import NormResult, S_norm, SchmidtDecomposition, s_norm, schmidt_decompose, schmidt_rank
from .search import SearchConfig, counterexample_search
from .superop import SuperOp
from .tensor import (
    Ket,
    Opr,
    Permutation,
    Shape,
    bipartite_matrix,
    kron_all,
    maximally_entangled,
    op_to_vec,
    partial_transpose,
    sample,
    swap_operator,
    tensor_product,
    vec_to_op,
)
