"""Level-by-level approximate factorization driver.

Processing runs from the finest level down to the root.  At each level the
interiors and separators assigned to that level are eliminated (exact block
Cholesky with Schur updates confined to neighbor blocks), the remaining
interfaces are optionally rescaled to identity diagonals and sparsified by
low-rank compression of their coupling, and sibling clusters merge into
their parents.  The recorded transforms form the preconditioner.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .densekernels import cholesky, interpolative_decomposition, rrqr_truncate
from .errors import BreakdownError
from .sparsecore import BlockMatrix, SymSparseMatrix
from .transforms import (
    EliminationTransform,
    InterpSparsifyTransform,
    MergeTransform,
    OrthSparsifyTransform,
    Preconditioner,
    ScalingTransform,
    factor_nnz,
)

__all__ = [
    "FactorOptions",
    "LevelStats",
    "eliminate_cluster",
    "scale_interface",
    "sparsify_orth",
    "sparsify_interp",
    "merge_level",
    "factorize",
    "default_skip",
]

VARIANTS = ("in", "ins", "orths")
BACKENDS = ("auto", "geo", "graph")


@dataclass
class FactorOptions:
    """Knobs for the factorization.

    ``eps`` is the compression tolerance (0 keeps everything, exact
    factorization).  ``levels``/``skip`` of 0/None pick size-based defaults.
    ``skip`` counts leaf-side levels processed without sparsification.
    """

    eps: float = 1e-2
    variant: str = "orths"
    levels: int = 0
    skip: Optional[int] = None
    backend: str = "auto"

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.levels < 0:
            raise ValueError("levels must be >= 0 (0 = automatic)")
        if self.skip is not None and self.skip < 0:
            raise ValueError("skip must be >= 0")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")


@dataclass
class LevelStats:
    level: int
    t_elim: float = 0.0
    t_scale: float = 0.0
    t_sparsify: float = 0.0
    t_merge: float = 0.0
    cum_nnz: int = 0


def default_skip(n):
    """Skip sparsification on the 4 finest levels for large problems."""
    return 0 if n < 100_000 else 4


def eliminate_cluster(bm: BlockMatrix, uid) -> EliminationTransform:
    """Eliminate one cluster, applying its Schur update to neighbor pairs."""
    dofs = bm.dofs[uid]
    chol = cholesky(bm.get_block(uid, uid))
    nbrs = [nb for nb in sorted(bm.neighbors[uid]) if nb != uid]
    blocks = [bm.get_block(nb, uid) for nb in nbrs]
    if not blocks:
        coupling = np.zeros((0, dofs.size))
        nbr_dofs = np.empty(0, dtype=np.int64)
    else:
        stacked = np.vstack(blocks)
        # A_ns L^{-T}, computed through one triangular solve on the stack
        coupling = solve_triangular(chol, stacked.T, lower=True, check_finite=False).T
        update = coupling @ coupling.T
        offs = np.concatenate(([0], np.cumsum([b.shape[0] for b in blocks])))
        for i in range(len(nbrs)):
            for j in range(i, len(nbrs)):
                bm.subtract_from_block(
                    nbrs[i],
                    nbrs[j],
                    update[offs[i] : offs[i + 1], offs[j] : offs[j + 1]],
                )
        nbr_dofs = np.concatenate([bm.dofs[nb] for nb in nbrs])
    bm.remove_cluster(uid)
    return EliminationTransform(dofs, chol, nbr_dofs, coupling)


def scale_interface(bm: BlockMatrix, uid) -> ScalingTransform:
    """Rescale a cluster so its diagonal block becomes the identity."""
    dofs = bm.dofs[uid]
    chol = cholesky(bm.get_block(uid, uid))
    for nb in sorted(bm.neighbors[uid]):
        if nb == uid:
            continue
        blk = bm.get_block(uid, nb)
        bm.set_block(uid, nb, solve_triangular(chol, blk, lower=True, check_finite=False))
    bm.set_block(uid, uid, np.eye(dofs.size))
    return ScalingTransform(dofs, chol)


def sparsify_orth(bm: BlockMatrix, uid, eps) -> OrthSparsifyTransform:
    """Rotate a scaled interface onto its coupling's column basis and shrink.

    Requires the diagonal block to be identity.  The rotated coordinates
    past the numerical rank of the stacked coupling decouple exactly (their
    residual coupling is dropped) and leave the active system.  Neighbor
    pair blocks are untouched.
    """
    dofs = bm.dofs[uid]
    nbrs = [nb for nb in sorted(bm.neighbors[uid]) if nb != uid]
    blocks = [bm.get_block(uid, nb) for nb in nbrs]
    if blocks:
        w = np.hstack(blocks)
    else:
        w = np.zeros((dofs.size, 0))
    rr = rrqr_truncate(w, eps)
    rank = rr.rank
    tr = OrthSparsifyTransform(dofs, rr.Q, rank)
    if rank == 0:
        bm.remove_cluster(uid)
        return tr
    # rows of Q^T A_pn without forming the product: R with columns unpermuted
    packed = np.zeros((rank, w.shape[1]))
    packed[:, rr.perm] = rr.R[:rank, :]
    bm.shrink_cluster(uid, np.arange(rank))
    bm.set_block(uid, uid, np.eye(rank))
    col = 0
    for nb, blk in zip(nbrs, blocks):
        width = blk.shape[1]
        bm.set_block(uid, nb, packed[:, col : col + width])
        col += width
    return tr


def sparsify_interp(bm: BlockMatrix, uid, eps, scaled=False) -> InterpSparsifyTransform:
    """Compress an interface by interpolating dropped dofs from kept ones.

    The kept subset comes from a column interpolative decomposition of the
    stacked neighbor coupling; dropped dofs are decoupled from the
    neighbors (the approximation) and eliminated against the kept block.
    ``scaled`` asserts the diagonal is identity, shortcutting its reads.
    """
    dofs = bm.dofs[uid]
    nbrs = [nb for nb in sorted(bm.neighbors[uid]) if nb != uid]
    blocks = [bm.get_block(nb, uid) for nb in nbrs]
    if blocks:
        w = np.vstack(blocks)
    else:
        w = np.zeros((0, dofs.size))
    idr = interpolative_decomposition(w, eps)
    c, f, t = idr.kept, idr.dropped, idr.interp
    if scaled:
        acc = np.eye(c.size)
        cff = np.eye(f.size) + t.T @ t
        ccf = -t
    else:
        app = bm.get_block(uid, uid)
        acc = app[np.ix_(c, c)]
        acf = app[np.ix_(c, f)]
        cff = app[np.ix_(f, f)] - acf.T @ t - t.T @ acf + t.T @ (acc @ t)
        ccf = acf - acc @ t
    chol_ff = cholesky(cff)
    if ccf.size:
        coupling = solve_triangular(chol_ff, ccf.T, lower=True, check_finite=False).T
    else:
        coupling = np.zeros((c.size, f.size))
    tr = InterpSparsifyTransform(dofs[c], dofs[f], t, chol_ff, coupling)
    if c.size == 0:
        bm.remove_cluster(uid)
        return tr
    if f.size == 0:
        return tr
    bm.shrink_cluster(uid, c)
    bm.set_block(uid, uid, acc - coupling @ coupling.T)
    for nb, blk in zip(nbrs, blocks):
        bm.set_block(nb, uid, blk[:, c])
    return tr


def merge_level(bm: BlockMatrix, hierarchy, level, uids):
    """Merge the surviving level clusters into their parents.

    ``uids`` maps hierarchy cluster index at ``level`` to the live cluster
    uid (None once eliminated or fully dropped).  Returns the bookkeeping
    transform and the uid list for level - 1.
    """
    n_parents = hierarchy.n_clusters(level - 1)
    groups = [[] for _ in range(n_parents)]
    for idx, uid in enumerate(uids):
        if uid is not None:
            groups[hierarchy.parent(level, idx)].append(uid)
    live = [(p, g) for p, g in enumerate(groups) if g]
    new_uids = bm.merge_groups([g for _, g in live])
    parent_uids = [None] * n_parents
    for (p, _), uid in zip(live, new_uids):
        parent_uids[p] = uid
    return MergeTransform(level, len(live)), parent_uids


def _call_hook(hooks, name, level, bm, uids):
    if hooks:
        fn = hooks.get(name)
        if fn is not None:
            fn(level, bm, uids)


def factorize(a: SymSparseMatrix, hierarchy, options=None, hooks=None) -> Preconditioner:
    """Run the full multilevel factorization of ``a`` over ``hierarchy``.

    ``hooks`` may carry callbacks keyed "after_eliminate", "after_scale",
    "after_sparsify", "after_merge", each called as fn(level, bm, uids);
    intended for instrumentation and tests.
    """
    opts = options if options is not None else FactorOptions()
    nlev = hierarchy.levels
    if opts.skip is None:
        skip = min(default_skip(a.n), nlev - 1)
    else:
        skip = opts.skip
        if skip >= nlev:
            raise ValueError(f"skip ({skip}) must be < levels ({nlev})")

    finest = hierarchy.interfaces(nlev)
    bm = BlockMatrix.from_matrix(a, [c.vertices for c in finest])
    uids = list(range(len(finest)))
    sep_levels = [c.sep.level for c in finest]

    transforms = []
    stats = []
    size_top = 0

    for lvl in range(nlev, 0, -1):
        st = LevelStats(level=lvl)
        if lvl == 1:
            size_top = bm.total_active_dofs()

        t0 = time.perf_counter()
        for idx in range(len(uids)):
            if uids[idx] is None or sep_levels[idx] != lvl:
                continue
            try:
                transforms.append(eliminate_cluster(bm, uids[idx]))
            except BreakdownError as e:
                raise BreakdownError(str(e), pivot=e.pivot, level=lvl, cluster=idx) from None
            uids[idx] = None
        st.t_elim = time.perf_counter() - t0
        _call_hook(hooks, "after_eliminate", lvl, bm, uids)

        if lvl > 1 and (nlev - lvl) >= skip:
            active = [i for i, uid in enumerate(uids) if uid is not None]
            if opts.variant in ("ins", "orths"):
                t0 = time.perf_counter()
                for idx in active:
                    try:
                        transforms.append(scale_interface(bm, uids[idx]))
                    except BreakdownError as e:
                        raise BreakdownError(
                            str(e), pivot=e.pivot, level=lvl, cluster=idx
                        ) from None
                st.t_scale = time.perf_counter() - t0
                _call_hook(hooks, "after_scale", lvl, bm, uids)
            t0 = time.perf_counter()
            for idx in active:
                if not bm.neighbors[uids[idx]]:
                    # no coupling left to compress; cluster stays whole until
                    # its own elimination level (keeps the top separator intact)
                    continue
                if opts.variant == "orths":
                    tr = sparsify_orth(bm, uids[idx], opts.eps)
                    if tr.rank == 0:
                        uids[idx] = None
                else:
                    try:
                        tr = sparsify_interp(
                            bm, uids[idx], opts.eps, scaled=(opts.variant == "ins")
                        )
                    except BreakdownError as e:
                        raise BreakdownError(
                            str(e), pivot=e.pivot, level=lvl, cluster=idx
                        ) from None
                    if tr.coarse.size == 0:
                        uids[idx] = None
                transforms.append(tr)
            st.t_sparsify = time.perf_counter() - t0
            _call_hook(hooks, "after_sparsify", lvl, bm, uids)

        if lvl > 1:
            t0 = time.perf_counter()
            tr, uids = merge_level(bm, hierarchy, lvl, uids)
            transforms.append(tr)
            sep_levels = [c.sep.level for c in hierarchy.interfaces(lvl - 1)]
            st.t_merge = time.perf_counter() - t0
            _call_hook(hooks, "after_merge", lvl, bm, uids)

        st.cum_nnz = factor_nnz(transforms)
        stats.append(st)

    return Preconditioner(
        n=a.n,
        transforms=transforms,
        levels=nlev,
        size_top=size_top,
        level_stats=stats,
        options=opts,
    )
