"""Dense kernels used on interface-sized blocks.

Everything here wraps LAPACK (via scipy) and adds the semantics the
factorization needs: breakdown reporting with a pivot index, the relative
truncation rule for column-pivoted QR, and the interpolative decomposition
built from its output.  All inputs are small dense blocks, never the global
matrix.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BreakdownError

__all__ = [
    "RrqrResult",
    "IdResult",
    "cholesky",
    "rrqr_truncate",
    "interpolative_decomposition",
]


@dataclass(frozen=True)
class RrqrResult:
    """Column-pivoted QR with a truncation split.

    ``Q`` is the full square orthogonal factor, ``R`` upper-triangular with
    ``Q @ R = B[:, perm]``, and ``rank`` the number of leading rows retained
    under the relative diagonal rule.
    """

    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray
    rank: int


@dataclass(frozen=True)
class IdResult:
    """Interpolative decomposition: B[:, dropped] ~= B[:, kept] @ interp."""

    kept: np.ndarray
    dropped: np.ndarray
    interp: np.ndarray
    err: float


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T = a.

    Raises BreakdownError carrying the 0-based pivot index when ``a`` is not
    positive definite.  Only the lower triangle of ``a`` is read.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        return scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        raise BreakdownError(
            f"non-positive pivot {_first_bad_pivot(a)} in {a.shape[0]}x{a.shape[0]} Cholesky",
            pivot=_first_bad_pivot(a),
        ) from None


def _first_bad_pivot(a: np.ndarray) -> int:
    """Index of the first non-positive pivot of an unblocked Cholesky sweep."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for i in range(n):
        d = a[i, i]
        if not d > 0.0:
            return i
        a[i, i] = np.sqrt(d)
        if i + 1 < n:
            a[i + 1 :, i] /= a[i, i]
            a[i + 1 :, i + 1 :] -= np.outer(a[i + 1 :, i], a[i + 1 :, i])
    return n - 1  # scipy refused but all pivots look positive; report the last


def rrqr_truncate(b: np.ndarray, eps: float) -> RrqrResult:
    """Column-pivoted Householder QR of ``b`` with the relative truncation rule.

    The retained rank is max{i : |R_ii| / |R_11| >= eps} (0 if the matrix is
    zero); eps = 0 keeps everything.  ``Q`` is returned explicitly since the
    factorization stores it as a change of basis on interface coordinates.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    b = np.ascontiguousarray(b, dtype=float)
    if b.ndim != 2:
        raise ValueError("expected a 2-d array")
    m, k = b.shape
    if m == 0 or k == 0:
        return RrqrResult(np.eye(m), np.zeros((m, k)), np.arange(k), 0)
    q, r, perm = scipy.linalg.qr(b, mode="full", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0:
        rank = 0
    elif eps == 0.0:
        rank = min(m, k)
    else:
        satisfied = np.nonzero(diag >= eps * diag[0])[0]
        rank = int(satisfied[-1]) + 1 if satisfied.size else 0
    return RrqrResult(q, r, perm, rank)


def interpolative_decomposition(b: np.ndarray, eps: float) -> IdResult:
    """Split the columns of ``b`` into kept and dropped sets.

    Kept columns reproduce themselves exactly; dropped columns are
    approximated as B[:, kept] @ interp with residual norm ``err`` (the
    2-norm of the trailing R block).  An exactly singular leading triangle
    shrinks the kept set until it is invertible.
    """
    b = np.ascontiguousarray(b, dtype=float)
    m, k = b.shape
    res = rrqr_truncate(b, eps)
    rank = res.rank
    diag = np.abs(np.diag(res.R))
    zeros = np.nonzero(diag == 0.0)[0]
    if zeros.size:
        rank = min(rank, int(zeros[0]))
    kept = res.perm[:rank].copy()
    dropped = res.perm[rank:].copy()
    if rank:
        interp = scipy.linalg.solve_triangular(
            res.R[:rank, :rank], res.R[:rank, rank:], lower=False, check_finite=False
        )
    else:
        interp = np.zeros((0, k))
    tail = res.R[rank:, rank:]
    err = float(np.linalg.norm(tail, 2)) if tail.size else 0.0
    return IdResult(kept, dropped, interp, err)
