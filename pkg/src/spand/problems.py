"""Synthetic benchmark problems: high-contrast grid Laplacians.

Coefficient fields are quantized two-level contrasts: a seeded uniform
array is smoothed by a unit-width Gaussian and thresholded at 0.5 into
values rho (high) and 1/rho (low).  The operators are the standard 5- and
7-point finite-volume Laplacians with face coefficients averaged from the
adjacent cells and Dirichlet conditions folded into the diagonal.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .sparsecore import SymSparseMatrix

__all__ = ["ContrastField", "gen_field", "gen_laplacian_2d", "gen_laplacian_3d"]


@dataclass(frozen=True)
class ContrastField:
    dims: tuple
    values: np.ndarray
    rho: float
    seed: int


def gen_field(dims, rho, seed) -> ContrastField:
    """Quantized contrast field with values in {rho, 1/rho}."""
    if rho < 1:
        raise ValueError("rho must be >= 1")
    dims = tuple(int(d) for d in dims)
    rng = np.random.default_rng(seed)
    raw = rng.random(dims)
    smooth = gaussian_filter(raw, sigma=1.0, truncate=3.0, mode="constant")
    values = np.where(smooth >= 0.5, float(rho), 1.0 / float(rho))
    return ContrastField(dims, values, float(rho), int(seed))


def gen_laplacian_2d(n, rho=1.0, seed=0):
    """5-point Laplacian on an n x n grid; returns (matrix, cell coords)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    a = gen_field((n, n), rho, seed).values
    fh = 0.5 * (a[:, :-1] + a[:, 1:])  # faces between (i, j) and (i, j+1)
    fv = 0.5 * (a[:-1, :] + a[1:, :])  # faces between (i, j) and (i+1, j)

    diag = np.zeros((n, n))
    diag[:, 1:] += fh
    diag[:, :-1] += fh
    diag[1:, :] += fv
    diag[:-1, :] += fv
    # Dirichlet faces carry the cell's own value
    diag[:, 0] += a[:, 0]
    diag[:, -1] += a[:, -1]
    diag[0, :] += a[0, :]
    diag[-1, :] += a[-1, :]

    ids = np.arange(n * n, dtype=np.int64).reshape(n, n)
    rows = np.concatenate([ids.ravel(), ids[:, 1:].ravel(), ids[1:, :].ravel()])
    cols = np.concatenate([ids.ravel(), ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    vals = np.concatenate([diag.ravel(), -fh.ravel(), -fv.ravel()])
    m = SymSparseMatrix(n * n, rows, cols, vals)

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    coords = np.column_stack([ii.ravel(), jj.ravel()]).astype(float)
    return m, coords


def gen_laplacian_3d(n, rho=1.0, seed=0):
    """7-point Laplacian on an n x n x n grid; returns (matrix, cell coords)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    a = gen_field((n, n, n), rho, seed).values
    fx = 0.5 * (a[:-1, :, :] + a[1:, :, :])
    fy = 0.5 * (a[:, :-1, :] + a[:, 1:, :])
    fz = 0.5 * (a[:, :, :-1] + a[:, :, 1:])

    diag = np.zeros((n, n, n))
    diag[1:, :, :] += fx
    diag[:-1, :, :] += fx
    diag[:, 1:, :] += fy
    diag[:, :-1, :] += fy
    diag[:, :, 1:] += fz
    diag[:, :, :-1] += fz
    diag[0, :, :] += a[0, :, :]
    diag[-1, :, :] += a[-1, :, :]
    diag[:, 0, :] += a[:, 0, :]
    diag[:, -1, :] += a[:, -1, :]
    diag[:, :, 0] += a[:, :, 0]
    diag[:, :, -1] += a[:, :, -1]

    ids = np.arange(n**3, dtype=np.int64).reshape(n, n, n)
    rows = np.concatenate(
        [ids.ravel(), ids[1:, :, :].ravel(), ids[:, 1:, :].ravel(), ids[:, :, 1:].ravel()]
    )
    cols = np.concatenate(
        [ids.ravel(), ids[:-1, :, :].ravel(), ids[:, :-1, :].ravel(), ids[:, :, :-1].ravel()]
    )
    vals = np.concatenate([diag.ravel(), -fx.ravel(), -fy.ravel(), -fz.ravel()])
    m = SymSparseMatrix(n**3, rows, cols, vals)

    ii, jj, kk = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    coords = np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()]).astype(float)
    return m, coords
