"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from spand import SymSparseMatrix, adjacency, gen_laplacian_2d, order_and_cluster


def dense_transpose_map(precond):
    """Materialize the forward (transpose) map as a dense matrix.

    Column i is the transform sequence applied to e_i, so the result is the
    matrix that left-multiplies residuals in the preconditioner's forward
    sweep.  Oracle for adjoint/exactness checks on small problems.
    """
    n = precond.n
    eye = np.eye(n)
    return np.column_stack([precond.apply_transpose(eye[:, i]) for i in range(n)])


def reference_cg(matvec, b, tol=1e-12, maxit=500):
    """Minimal textbook CG, written independently of the package solver.

    Stops on the recomputed relative residual.  Returns (x, iterations,
    residuals).
    """
    n = b.shape[0]
    x = np.zeros(n)
    norm_b = np.linalg.norm(b)
    r = b.copy()
    rz = float(r @ r)
    p = r.copy()
    residuals = []
    for it in range(1, maxit + 1):
        ap = matvec(p)
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(b - matvec(x)) / norm_b)
        residuals.append(rel)
        if rel <= tol:
            return x, it, residuals
        rz_new = float(r @ r)
        beta = rz_new / rz
        rz = rz_new
        p = r + beta * p
    return x, maxit, residuals


def random_spd(rng, n, shift=1.0):
    b = rng.standard_normal((n, n))
    return b.T @ b + shift * np.eye(n)


def make_block_matrix(dense, clusters):
    """BlockMatrix over a dense symmetric array with explicit clusters."""
    from spand import BlockMatrix

    a = SymSparseMatrix.from_dense(np.asarray(dense, dtype=float))
    return BlockMatrix.from_matrix(a, [np.asarray(c, dtype=np.int64) for c in clusters])


@pytest.fixture(scope="session")
def lap2d_16():
    return gen_laplacian_2d(16, 1.0, 0)


@pytest.fixture(scope="session")
def lap2d_32():
    return gen_laplacian_2d(32, 1.0, 0)


@pytest.fixture(scope="session")
def hier_2d_16(lap2d_16):
    a, coords = lap2d_16
    return order_and_cluster(adjacency(a), coords=coords)


@pytest.fixture(scope="session")
def hier_2d_32(lap2d_32):
    a, coords = lap2d_32
    return order_and_cluster(adjacency(a), coords=coords)
