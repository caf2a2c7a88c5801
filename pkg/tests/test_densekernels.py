"""Dense kernel tests: Cholesky, truncated RRQR, interpolative decomposition.

Frozen values are hand-derived from the truncation rule
r = max{i : |R_ii|/|R_11| >= eps} and from 2x2 Cholesky by hand.
"""

import numpy as np
import pytest

from spand.densekernels import (
    cholesky,
    interpolative_decomposition,
    rrqr_truncate,
)
from spand.errors import BreakdownError


def random_orthogonal(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q


class TestCholesky:
    def test_scalar(self):
        assert np.array_equal(cholesky(np.array([[4.0]])), [[2.0]])

    def test_two_by_two_hand_value(self):
        l = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        want = np.array([[2.0, 0.0], [1.0, np.sqrt(2.0)]])
        assert np.allclose(l, want, atol=1e-15)

    def test_indefinite_reports_pivot(self):
        with pytest.raises(BreakdownError) as exc:
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert exc.value.pivot == 1

    def test_zero_diagonal_pivot_zero(self):
        with pytest.raises(BreakdownError) as exc:
            cholesky(np.array([[0.0]]))
        assert exc.value.pivot == 0

    def test_pivot_index_mid_matrix(self):
        a = np.diag([1.0, 2.0, -3.0, 4.0])
        with pytest.raises(BreakdownError) as exc:
            cholesky(a)
        assert exc.value.pivot == 2

    def test_empty(self):
        assert cholesky(np.zeros((0, 0))).shape == (0, 0)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            cholesky(np.zeros((2, 3)))

    def test_reconstruction_random_spd(self):
        rng = np.random.default_rng(0)
        for n in (1, 3, 7, 20):
            b = rng.standard_normal((n, n))
            a = b @ b.T + n * np.eye(n)
            l = cholesky(a)
            assert np.allclose(np.triu(l, 1), 0.0)
            assert (np.diag(l) > 0).all()
            assert np.linalg.norm(l @ l.T - a) <= 1e-12 * np.linalg.norm(a)


class TestRrqrTruncate:
    def test_diagonal_decay_rule(self):
        b = np.diag([1.0, 0.5, 0.009])
        assert rrqr_truncate(b, 0.01).rank == 2
        assert rrqr_truncate(b, 1e-8).rank == 3
        assert rrqr_truncate(b, 0.0).rank == 3
        assert rrqr_truncate(b, 0.6).rank == 1

    def test_zero_matrix(self):
        for eps in (0.0, 1e-8, 1e-2):
            assert rrqr_truncate(np.zeros((3, 3)), eps).rank == 0

    def test_identity_keeps_everything(self):
        for eps in (0.0, 1e-8, 1e-2, 0.9):
            assert rrqr_truncate(np.eye(4), eps).rank == 4

    def test_geometric_decay_counts(self):
        # singular values 2^0 .. 2^-9; 2^-i >= 1e-2 holds for i <= 6
        rng = np.random.default_rng(1)
        d = 2.0 ** -np.arange(10.0)
        b = random_orthogonal(rng, 10) * d  # columns scaled, pivots follow d
        assert rrqr_truncate(b, 1e-2).rank == 7
        assert rrqr_truncate(b, 1e-8).rank == 10
        assert rrqr_truncate(b, 0.0).rank == 10

    def test_rank_one_outer_product(self):
        rng = np.random.default_rng(2)
        u = rng.standard_normal(6)
        v = rng.standard_normal(4)
        b = np.outer(u, v)
        res = rrqr_truncate(b, 1e-8)
        assert res.rank == 1
        recon = res.Q[:, :1] @ res.R[:1, :]
        assert np.linalg.norm(b[:, res.perm] - recon) <= 1e-12 * np.linalg.norm(b)

    def test_orthogonality_and_reconstruction(self):
        rng = np.random.default_rng(3)
        for shape in [(5, 5), (8, 3), (3, 8), (1, 4), (6, 1)]:
            b = rng.standard_normal(shape)
            res = rrqr_truncate(b, 1e-6)
            n = res.Q.shape[0]
            assert np.abs(res.Q.T @ res.Q - np.eye(n)).max() <= 1e-13
            assert np.allclose(res.Q @ res.R, b[:, res.perm], atol=1e-12)
            diag = np.abs(np.diag(res.R))
            assert (np.diff(diag) <= 1e-14).all()

    def test_truncation_monotone_in_eps(self):
        rng = np.random.default_rng(4)
        b = rng.standard_normal((12, 9)) * 10.0 ** -np.arange(9)
        ladder = [0.0, 1e-10, 1e-6, 1e-3, 1e-1, 0.5]
        ranks = [rrqr_truncate(b, eps).rank for eps in ladder]
        assert all(r1 >= r2 for r1, r2 in zip(ranks, ranks[1:]))

    def test_empty_shapes(self):
        assert rrqr_truncate(np.zeros((0, 4)), 1e-2).rank == 0
        assert rrqr_truncate(np.zeros((4, 0)), 1e-2).rank == 0

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            rrqr_truncate(np.eye(2), -1e-3)


class TestInterpolativeDecomposition:
    def test_duplicate_column(self):
        rng = np.random.default_rng(5)
        u = rng.standard_normal(6)
        b = np.column_stack([u, u])
        res = interpolative_decomposition(b, 1e-8)
        assert np.array_equal(res.kept, [0])
        assert np.array_equal(res.dropped, [1])
        assert np.allclose(res.interp, [[1.0]])
        assert res.err <= 1e-12 * np.linalg.norm(u)

    def test_full_rank_identity(self):
        res = interpolative_decomposition(np.eye(2), 1e-8)
        assert sorted(res.kept) == [0, 1]
        assert res.dropped.size == 0
        assert res.interp.shape == (2, 0)

    def test_zero_matrix(self):
        res = interpolative_decomposition(np.zeros((3, 4)), 1e-8)
        assert res.kept.size == 0
        assert sorted(res.dropped) == [0, 1, 2, 3]
        assert res.interp.shape == (0, 4)
        assert res.err == 0.0

    def test_exact_zero_column_shrinks_kept_set(self):
        # eps=0 asks for full rank, but the zero column forces R_33 = 0;
        # the kept set must shrink instead of hitting a singular solve
        rng = np.random.default_rng(6)
        b = np.column_stack(
            [rng.standard_normal(4), np.zeros(4), rng.standard_normal(4)]
        )
        res = interpolative_decomposition(b, 0.0)
        assert len(res.kept) == 2
        assert 1 in res.dropped
        assert res.err == 0.0
        recon = b[:, res.kept] @ res.interp
        assert np.allclose(recon, b[:, res.dropped], atol=1e-14)

    def test_kept_columns_exact_dropped_within_err(self):
        rng = np.random.default_rng(7)
        for eps in (1e-1, 1e-4, 1e-8):
            left = rng.standard_normal((20, 4))
            right = rng.standard_normal((4, 12))
            b = left @ right + 1e-6 * rng.standard_normal((20, 12))
            res = interpolative_decomposition(b, eps)
            if res.dropped.size == 0:
                assert res.err == 0.0
                continue
            resid = b[:, res.dropped] - b[:, res.kept] @ res.interp
            bound = res.err * (1 + 1e-12) + 1e-14
            assert np.linalg.norm(resid, 2) <= bound

    def test_err_matches_tail_norm_route(self):
        # independent route: err equals the 2-norm of the dropped residual
        rng = np.random.default_rng(8)
        b = rng.standard_normal((10, 6)) * 10.0 ** -np.arange(6)
        res = interpolative_decomposition(b, 1e-3)
        assert res.dropped.size > 0
        resid = b[:, res.dropped] - b[:, res.kept] @ res.interp
        assert np.isclose(np.linalg.norm(resid, 2), res.err, rtol=1e-10, atol=1e-14)
