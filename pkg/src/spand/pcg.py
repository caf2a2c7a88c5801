"""Preconditioned conjugate gradient with true-residual stopping.

Convergence is judged on the explicitly recomputed relative residual
norm(b - A x)/norm(b) every iteration, not on the recurrence residual, so
the reported history reflects what the factorization actually delivers.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import IndefinitePreconditionerError

__all__ = ["SolveStats", "pcg_solve"]


@dataclass
class SolveStats:
    """Outcome of one solve, plus setup figures filled in by the caller."""

    iterations: int = 0
    residuals: list = field(default_factory=list)
    converged: bool = False
    t_p: float = 0.0  # partition/ordering seconds
    t_f: float = 0.0  # factorization seconds
    t_s: float = 0.0  # solve seconds
    size_top: int = 0
    mem_f: int = 0


def pcg_solve(a, b, m=None, tol=1e-12, maxit=500):
    """Solve a x = b by CG, preconditioned by ``m`` when given.

    Returns (x, SolveStats).  Raises IndefinitePreconditionerError when the
    preconditioned residual loses positivity, ValueError on non-positive
    curvature (a not SPD) or bad arguments.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if maxit < 0:
        raise ValueError("maxit must be >= 0")
    b = np.asarray(b, dtype=np.float64)
    n = a.n
    if b.shape != (n,):
        raise ValueError(f"rhs shape {b.shape} does not match matrix size {n}")

    t0 = time.perf_counter()
    stats = SolveStats()
    x = np.zeros(n)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        stats.converged = True
        stats.t_s = time.perf_counter() - t0
        return x, stats

    r = b.copy()
    z = m.precondition(r) if m is not None else r.copy()
    rz = float(r @ z)
    if rz <= 0.0:
        raise IndefinitePreconditionerError(f"<z, r> = {rz:g} on the initial residual")
    p = z.copy()

    for it in range(1, maxit + 1):
        ap = a.matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            raise ValueError(f"non-positive curvature p'Ap = {pap:g}; matrix is not SPD")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(b - a.matvec(x)) / norm_b)
        stats.residuals.append(rel)
        stats.iterations = it
        if rel <= tol:
            stats.converged = True
            break
        z = m.precondition(r) if m is not None else r.copy()
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            raise IndefinitePreconditionerError(f"<z, r> = {rz_new:g} at iteration {it}")
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p

    stats.t_s = time.perf_counter() - t0
    return x, stats
