"""Sparsified nested-dissection preconditioning for sparse SPD systems.

The package factors a symmetric positive definite matrix into a product of
elementary per-cluster transforms (elimination, scaling, low-rank
sparsification, merge) ordered by a modified nested dissection, then uses
the result as a preconditioner inside conjugate gradient.
"""

from .densekernels import (
    IdResult,
    RrqrResult,
    cholesky,
    interpolative_decomposition,
    rrqr_truncate,
)
from .errors import (
    BreakdownError,
    IndefinitePreconditionerError,
    MatrixFormatError,
    SpandError,
    StaleIndexError,
    SymmetryError,
)
from .factorizer import (
    FactorOptions,
    LevelStats,
    default_skip,
    eliminate_cluster,
    factorize,
    merge_level,
    scale_interface,
    sparsify_interp,
    sparsify_orth,
)
from .ordering import (
    Cluster,
    ClusterHierarchy,
    SepId,
    VertexTag,
    default_levels,
    load_coords,
    order_and_cluster,
    vertex_separator_geometric,
    vertex_separator_graph,
)
from .pcg import SolveStats, pcg_solve
from .problems import ContrastField, gen_field, gen_laplacian_2d, gen_laplacian_3d
from .solver import SpandSolver
from .sparsecore import (
    BlockMatrix,
    DenseBlock,
    Graph,
    SymSparseMatrix,
    adjacency,
    load_matrix_market,
    write_matrix_market,
)
from .transforms import (
    EliminationTransform,
    InterpSparsifyTransform,
    MergeTransform,
    OrthSparsifyTransform,
    Preconditioner,
    ScalingTransform,
    factor_nnz,
)

__version__ = "0.1.0"

__all__ = [
    "BlockMatrix",
    "BreakdownError",
    "Cluster",
    "ClusterHierarchy",
    "ContrastField",
    "DenseBlock",
    "EliminationTransform",
    "FactorOptions",
    "Graph",
    "IdResult",
    "IndefinitePreconditionerError",
    "InterpSparsifyTransform",
    "LevelStats",
    "MatrixFormatError",
    "MergeTransform",
    "OrthSparsifyTransform",
    "Preconditioner",
    "RrqrResult",
    "ScalingTransform",
    "SepId",
    "SolveStats",
    "SpandError",
    "SpandSolver",
    "StaleIndexError",
    "SymSparseMatrix",
    "SymmetryError",
    "VertexTag",
    "adjacency",
    "cholesky",
    "default_levels",
    "default_skip",
    "eliminate_cluster",
    "factor_nnz",
    "factorize",
    "gen_field",
    "gen_laplacian_2d",
    "gen_laplacian_3d",
    "interpolative_decomposition",
    "load_coords",
    "load_matrix_market",
    "merge_level",
    "order_and_cluster",
    "pcg_solve",
    "rrqr_truncate",
    "scale_interface",
    "sparsify_interp",
    "sparsify_orth",
    "vertex_separator_geometric",
    "vertex_separator_graph",
    "write_matrix_market",
]
