"""Elementary factorization transforms and their solve-phase application.

The factorization is a product of per-cluster transforms: block
eliminations, diagonal scalings, sparsification rotations or
interpolations, and cluster merges.  Each transform knows how to apply
itself (``forward``) and its transpose-inverse counterpart (``backward``)
to a full-length vector in place.  The preconditioner action is the
forward sweep in creation order followed by the backward sweep in reverse.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

__all__ = [
    "EliminationTransform",
    "ScalingTransform",
    "OrthSparsifyTransform",
    "InterpSparsifyTransform",
    "MergeTransform",
    "Preconditioner",
    "factor_nnz",
]

(_trtrs,) = get_lapack_funcs(("trtrs",), (np.empty(0, dtype=np.float64),))


def _solve_lower(chol, b, transpose=False):
    if chol.shape[0] == 0:
        return b
    x, info = _trtrs(chol, b, lower=1, trans=1 if transpose else 0)
    if info != 0:
        raise ValueError(f"triangular solve failed with info={info}")
    return x


class EliminationTransform:
    """Block Cholesky elimination of one cluster against its neighbors."""

    kind = "Elimination"
    __slots__ = ("dofs", "chol", "nbr_dofs", "coupling")

    def __init__(self, dofs, chol, nbr_dofs, coupling):
        self.dofs = dofs
        self.chol = chol
        self.nbr_dofs = nbr_dofs  # stacked over all neighbor clusters
        self.coupling = coupling  # A_ns L^{-T}, rows matching nbr_dofs

    def forward(self, x):
        y = _solve_lower(self.chol, x[self.dofs])
        x[self.dofs] = y
        if self.nbr_dofs.size:
            x[self.nbr_dofs] -= self.coupling @ y

    def backward(self, x):
        t = x[self.dofs]
        if self.nbr_dofs.size:
            t = t - self.coupling.T @ x[self.nbr_dofs]
        x[self.dofs] = _solve_lower(self.chol, t, transpose=True)

    def nnz(self):
        s = self.dofs.size
        return s * (s + 1) // 2 + self.coupling.size


class ScalingTransform:
    """Symmetric scaling turning a cluster's diagonal block into identity."""

    kind = "Scaling"
    __slots__ = ("dofs", "chol")

    def __init__(self, dofs, chol):
        self.dofs = dofs
        self.chol = chol

    def forward(self, x):
        x[self.dofs] = _solve_lower(self.chol, x[self.dofs])

    def backward(self, x):
        x[self.dofs] = _solve_lower(self.chol, x[self.dofs], transpose=True)

    def nnz(self):
        s = self.dofs.size
        return s * (s + 1) // 2


class OrthSparsifyTransform:
    """Orthogonal rotation aligning a cluster with its dominant coupling.

    The first ``rank`` rotated coordinates stay active; the rest decouple
    (their dropped coupling is the approximation) and leave the system.
    """

    kind = "OrthSparsify"
    __slots__ = ("dofs", "q", "rank")

    def __init__(self, dofs, q, rank):
        self.dofs = dofs
        self.q = q
        self.rank = rank

    def forward(self, x):
        x[self.dofs] = self.q.T @ x[self.dofs]

    def backward(self, x):
        x[self.dofs] = self.q @ x[self.dofs]

    def nnz(self):
        return self.q.size


class InterpSparsifyTransform:
    """Interpolative sparsification: fine dofs expressed via coarse ones.

    Forward folds the interpolation into the residual and eliminates the
    fine block; backward reconstructs fine values and corrects the coarse
    ones.
    """

    kind = "InterpSparsify"
    __slots__ = ("coarse", "fine", "interp", "chol_ff", "coupling")

    def __init__(self, coarse, fine, interp, chol_ff, coupling):
        self.coarse = coarse
        self.fine = fine
        self.interp = interp  # (coarse, fine)
        self.chol_ff = chol_ff
        self.coupling = coupling  # (coarse, fine), Schur coupling onto coarse

    def forward(self, x):
        rf = x[self.fine] - self.interp.T @ x[self.coarse]
        rf = _solve_lower(self.chol_ff, rf)
        x[self.fine] = rf
        x[self.coarse] -= self.coupling @ rf

    def backward(self, x):
        yf = x[self.fine] - self.coupling.T @ x[self.coarse]
        yf = _solve_lower(self.chol_ff, yf, transpose=True)
        x[self.fine] = yf
        x[self.coarse] -= self.interp @ yf

    def nnz(self):
        f = self.fine.size
        return self.interp.size + f * (f + 1) // 2 + self.coupling.size


class MergeTransform:
    """Bookkeeping marker for a cluster merge; acts as identity on vectors."""

    kind = "MergePermute"
    __slots__ = ("level", "n_groups")

    def __init__(self, level, n_groups):
        self.level = level
        self.n_groups = n_groups

    def forward(self, x):
        pass

    def backward(self, x):
        pass

    def nnz(self):
        return 0


def factor_nnz(transforms):
    return int(sum(t.nnz() for t in transforms))


@dataclass
class Preconditioner:
    """Approximate factorization of an SPD matrix, usable inside CG.

    ``apply_transpose`` maps a residual through every transform in creation
    order; ``apply`` runs the reverse sweep.  ``precondition`` composes the
    two, which is the symmetric positive definite operator CG needs.
    """

    n: int
    transforms: list
    levels: int
    size_top: int
    level_stats: list
    options: object

    def _checked_copy(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"expected vector of shape ({self.n},), got {v.shape}")
        return v.copy()

    def apply_transpose(self, r):
        x = self._checked_copy(r)
        for t in self.transforms:
            t.forward(x)
        return x

    def apply(self, y):
        x = self._checked_copy(y)
        for t in reversed(self.transforms):
            t.backward(x)
        return x

    def precondition(self, r):
        return self.apply(self.apply_transpose(r))

    def nnz(self):
        return factor_nnz(self.transforms)
