"""High-level solver facade with a scikit-learn estimator interface."""

import time

import numpy as np
import scipy.sparse
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .factorizer import FactorOptions, factorize
from .ordering import order_and_cluster
from .pcg import pcg_solve
from .sparsecore import SymSparseMatrix, adjacency

__all__ = ["SpandSolver"]


class SpandSolver(BaseEstimator):
    """Sparse SPD solver: hierarchical approximate factorization plus CG.

    ``fit(A, coords)`` partitions the adjacency graph, builds the
    preconditioner, and keeps the matrix; ``solve(b)`` then runs
    preconditioned CG.  ``A`` may be a SymSparseMatrix, a scipy sparse
    matrix, or a dense symmetric array.

    Parameters mirror FactorOptions plus the CG stopping controls.
    """

    def __init__(
        self,
        eps=1e-2,
        variant="orths",
        levels=0,
        skip=None,
        backend="auto",
        tol=1e-12,
        maxit=500,
    ):
        self.eps = eps
        self.variant = variant
        self.levels = levels
        self.skip = skip
        self.backend = backend
        self.tol = tol
        self.maxit = maxit

    @staticmethod
    def _coerce(a):
        if isinstance(a, SymSparseMatrix):
            return a
        if scipy.sparse.issparse(a):
            return SymSparseMatrix.from_scipy(a)
        return SymSparseMatrix.from_dense(np.asarray(a, dtype=float))

    def fit(self, A, coords=None):
        a = self._coerce(A)
        opts = FactorOptions(
            eps=self.eps,
            variant=self.variant,
            levels=self.levels,
            skip=self.skip,
            backend=self.backend,
        )
        t0 = time.perf_counter()
        hierarchy = order_and_cluster(
            adjacency(a), coords=coords, levels=opts.levels, backend=opts.backend
        )
        self.t_partition_ = time.perf_counter() - t0
        t0 = time.perf_counter()
        self.preconditioner_ = factorize(a, hierarchy, opts)
        self.t_factorize_ = time.perf_counter() - t0
        self.matrix_ = a
        self.hierarchy_ = hierarchy
        return self

    def _require_fitted(self):
        if not hasattr(self, "preconditioner_"):
            raise NotFittedError("SpandSolver must be fitted before use")

    def solve(self, b):
        self._require_fitted()
        x, stats = pcg_solve(
            self.matrix_, b, self.preconditioner_, tol=self.tol, maxit=self.maxit
        )
        stats.t_p = self.t_partition_
        stats.t_f = self.t_factorize_
        stats.size_top = self.preconditioner_.size_top
        stats.mem_f = self.preconditioner_.nnz()
        self.solve_stats_ = stats
        return x

    def precondition(self, r):
        self._require_fitted()
        return self.preconditioner_.precondition(r)
