"""Spectral node centralities of large networks from sampled adjacency data."""

__version__ = "0.1.0"

from .graph import (
    ArrowMaskedOperator,
    ColumnMaskedOperator,
    GraphParseError,
    SparseGraph,
    SparseVector,
    masked_matvec,
    parse_edge_list,
    remove_self_loops,
    transpose,
    write_edge_list,
)
from .matfun import (
    EvaluationError,
    KrylovDecomposition,
    MatfunResult,
    ScalarFunction,
    SpectralData,
    Tolerances,
    arnoldi,
    direct_core_evaluation,
    estimate_spectral_radius,
    evaluate_masked_function,
    exp_minus_one,
    lanczos,
    resolvent_minus_one,
    spectral_factorize,
    transpose_measures,
)
from .oracle import KrylovReference, dense_left_perron, dense_matfun, krylov_full_matfun
from .perron import (
    PerronConfig,
    PerronResult,
    RankDeficientProductError,
    left_perron,
    symmetric_perron,
)
from .ranking import (
    CentralityVector,
    Ranking,
    RankingReport,
    exact_matches,
    rank_nodes,
    topk_overlap,
)
from .sampling import SampleSet, WeightVector, draw_categorical, sample_columns, sample_rows

__all__ = [
    "__version__",
    "ArrowMaskedOperator",
    "CentralityVector",
    "ColumnMaskedOperator",
    "EvaluationError",
    "GraphParseError",
    "KrylovDecomposition",
    "KrylovReference",
    "MatfunResult",
    "PerronConfig",
    "PerronResult",
    "RankDeficientProductError",
    "Ranking",
    "RankingReport",
    "SampleSet",
    "ScalarFunction",
    "SparseGraph",
    "SparseVector",
    "SpectralData",
    "Tolerances",
    "WeightVector",
    "arnoldi",
    "dense_left_perron",
    "dense_matfun",
    "direct_core_evaluation",
    "draw_categorical",
    "estimate_spectral_radius",
    "evaluate_masked_function",
    "exact_matches",
    "exp_minus_one",
    "krylov_full_matfun",
    "lanczos",
    "left_perron",
    "masked_matvec",
    "parse_edge_list",
    "rank_nodes",
    "remove_self_loops",
    "resolvent_minus_one",
    "sample_columns",
    "sample_rows",
    "spectral_factorize",
    "symmetric_perron",
    "topk_overlap",
    "transpose",
    "transpose_measures",
    "write_edge_list",
]
