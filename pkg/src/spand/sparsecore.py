"""Symmetric sparse storage, Matrix Market I/O, graph view, and the
block-sparse trailing matrix mutated during factorization.

The input matrix is kept in canonical lower-triangle coordinate form (every
stored entry has row >= col, sorted, unique).  Explicit zeros are retained:
they define graph edges, and the ordering works on the graph.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import MatrixFormatError, StaleIndexError, SymmetryError

__all__ = [
    "SymSparseMatrix",
    "DenseBlock",
    "Graph",
    "BlockMatrix",
    "adjacency",
    "load_matrix_market",
    "write_matrix_market",
]

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class DenseBlock:
    """A dense sub-block addressed by global dof lists."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.rows), len(self.cols)):
            raise ValueError(
                f"values shape {self.values.shape} inconsistent with "
                f"{len(self.rows)} rows x {len(self.cols)} cols"
            )


class SymSparseMatrix:
    """Symmetric real matrix stored as its lower triangle in coordinate form."""

    def __init__(self, n, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise ValueError("rows, cols, vals must be 1-d arrays of equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n:
                raise ValueError("row index out of range")
            if cols.min() < 0 or (cols > rows).any():
                raise ValueError("entries must lie in the lower triangle (row >= col)")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        key = rows * n + cols
        if key.size and (np.diff(key) == 0).any():
            raise ValueError("duplicate (row, col) entries")
        self.n = int(n)
        self.rows = rows
        self.cols = cols
        self.vals = vals
        self._csr = None

    @property
    def nnz(self):
        """Number of stored (lower-triangle) entries."""
        return self.rows.size

    @classmethod
    def from_dense(cls, a, tol=_SYM_TOL):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square 2-d array")
        scale = max(np.abs(a).max(initial=0.0), 1.0)
        if np.abs(a - a.T).max(initial=0.0) > tol * scale:
            raise SymmetryError("dense input is not symmetric within tolerance")
        r, c = np.nonzero(np.tril(a))
        return cls(a.shape[0], r, c, a[r, c])

    @classmethod
    def from_scipy(cls, m, tol=_SYM_TOL):
        m = m.tocoo()
        if m.shape[0] != m.shape[1]:
            raise ValueError("expected a square sparse matrix")
        diff = abs(m - m.T)
        scale = max(np.abs(m.data).max(initial=0.0), 1.0)
        if diff.nnz and diff.max() > tol * scale:
            raise SymmetryError("sparse input is not symmetric within tolerance")
        keep = m.row >= m.col
        return cls(m.shape[0], m.row[keep], m.col[keep], m.data[keep])

    def tocsr(self):
        """Full (mirrored) scipy CSR view, cached; used for matvec and slicing."""
        if self._csr is None:
            off = self.rows != self.cols
            r = np.concatenate([self.rows, self.cols[off]])
            c = np.concatenate([self.cols, self.rows[off]])
            v = np.concatenate([self.vals, self.vals[off]])
            self._csr = scipy.sparse.csr_matrix((v, (r, c)), shape=(self.n, self.n))
        return self._csr

    def matvec(self, x):
        return self.tocsr() @ x

    def to_dense(self):
        return self.tocsr().toarray()

    def extract_block(self, rows, cols):
        """Dense copy of the rows x cols sub-block, mirrored from lower storage."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        for idx in (rows, cols):
            if idx.size and (idx.min() < 0 or idx.max() >= self.n):
                raise IndexError("dof index out of range")
        values = self.tocsr()[rows][:, cols].toarray()
        return DenseBlock(rows, cols, values)


class Graph:
    """Undirected adjacency in CSR form (no self-loops)."""

    def __init__(self, n, indptr, indices):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)

    @classmethod
    def from_edges(cls, n, edges):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if (edges[:, 0] == edges[:, 1]).any():
            raise ValueError("self-loops not allowed")
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n, indptr, dst)

    @property
    def vertices(self):
        return np.arange(self.n)

    def neighbors(self, v):
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edge_list(self):
        """Edges as sorted (i, j) tuples with i < j."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = src < self.indices
        return [(int(i), int(j)) for i, j in zip(src[keep], self.indices[keep])]

    def degree(self):
        return np.diff(self.indptr)


def adjacency(a: SymSparseMatrix) -> Graph:
    """Graph of the matrix: one undirected edge per stored off-diagonal entry."""
    off = a.rows != a.cols
    return Graph.from_edges(a.n, np.column_stack([a.cols[off], a.rows[off]]))


# ---------------------------------------------------------------------------
# Matrix Market I/O


def load_matrix_market(path) -> SymSparseMatrix:
    """Read a coordinate real symmetric (or symmetric-content general) file."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        tokens = header.split()
        if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
            raise MatrixFormatError(f"bad Matrix Market banner: {header.strip()!r}")
        obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise MatrixFormatError(f"unsupported object/format: {obj} {fmt}")
        if field != "real":
            raise MatrixFormatError(f"unsupported field: {field}")
        if symmetry not in ("symmetric", "general"):
            raise MatrixFormatError(f"unsupported symmetry: {symmetry}")

        size_line = None
        data_lines = []
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            if size_line is None:
                size_line = stripped
            else:
                data_lines.append(stripped)
    if size_line is None:
        raise MatrixFormatError("missing size line")
    parts = size_line.split()
    if len(parts) != 3:
        raise MatrixFormatError(f"bad size line: {size_line!r}")
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError as e:
        raise MatrixFormatError(f"bad size line: {size_line!r}") from e
    if nrows != ncols:
        raise MatrixFormatError(f"matrix is not square: {nrows} x {ncols}")
    if len(data_lines) != nnz:
        raise MatrixFormatError(f"expected {nnz} entries, found {len(data_lines)}")

    n = nrows
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    for k, line in enumerate(data_lines):
        parts = line.split()
        if len(parts) != 3:
            raise MatrixFormatError(f"bad entry line: {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as e:
            raise MatrixFormatError(f"bad entry line: {line!r}") from e
        if not (1 <= i <= n and 1 <= j <= n):
            raise MatrixFormatError(f"entry index ({i}, {j}) out of range for n={n}")
        rows[k], cols[k], vals[k] = i - 1, j - 1, v

    if symmetry == "symmetric":
        if (rows < cols).any():
            raise MatrixFormatError("upper-triangle entry in a symmetric file")
        out_r, out_c, out_v = rows, cols, vals
    else:
        out_r, out_c, out_v = _fold_general(n, rows, cols, vals)
    try:
        return SymSparseMatrix(n, out_r, out_c, out_v)
    except ValueError as e:
        raise MatrixFormatError(str(e)) from e


def _fold_general(n, rows, cols, vals):
    """Fold a general file onto the lower triangle, checking symmetry.

    A missing mirror counts as an explicit 0.0, so only genuinely asymmetric
    values fail; matched explicit zeros keep their edge.
    """
    lower = rows >= cols
    seen = {}
    for sel, transpose in ((lower, False), (~lower, True)):
        for i, j, v in zip(rows[sel], cols[sel], vals[sel]):
            key = (int(i), int(j)) if not transpose else (int(j), int(i))
            bucket = seen.setdefault(key, [None, None])
            slot = 1 if transpose else 0
            if bucket[slot] is not None:
                raise MatrixFormatError(f"duplicate entry at {key}")
            bucket[slot] = float(v)
    out_r, out_c, out_v = [], [], []
    for (i, j), (lo, up) in seen.items():
        if i == j:
            value = lo
        else:
            a = lo if lo is not None else 0.0
            b = up if up is not None else 0.0
            if abs(a - b) > _SYM_TOL * max(abs(a), abs(b)):
                raise SymmetryError(
                    f"asymmetric values at ({i}, {j}): {a!r} vs {b!r}"
                )
            value = lo if lo is not None else up
        out_r.append(i)
        out_c.append(j)
        out_v.append(value)
    return (
        np.asarray(out_r, dtype=np.int64),
        np.asarray(out_c, dtype=np.int64),
        np.asarray(out_v, dtype=np.float64),
    )


def write_matrix_market(a: SymSparseMatrix, path):
    """Write canonical lower-triangle storage; values round-trip bit-exactly."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{a.n} {a.n} {a.nnz}\n")
        for i, j, v in zip(a.rows, a.cols, a.vals):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


# ---------------------------------------------------------------------------
# Trailing matrix


class BlockMatrix:
    """Block-sparse symmetric matrix keyed by (cluster, cluster) pairs.

    Each active cluster owns an ordered list of global dofs.  Off-diagonal
    blocks are stored once under the key (min uid, max uid) in that
    orientation; reads mirror via transpose views.  Dof arrays are treated as
    immutable so recorded transforms can alias them safely.
    """

    def __init__(self, n):
        self.n = int(n)
        self.dofs = {}
        self.blocks = {}
        self.neighbors = {}
        self._owner = np.full(n, -1, dtype=np.int64)
        self._pos = np.zeros(n, dtype=np.int64)
        self._next = 0

    def add_cluster(self, dofs):
        dofs = np.asarray(dofs, dtype=np.int64)
        if dofs.size and (self._owner[dofs] != -1).any():
            raise ValueError("dofs already owned by an active cluster")
        uid = self._next
        self._next += 1
        self.dofs[uid] = dofs
        self.neighbors[uid] = set()
        self._owner[dofs] = uid
        self._pos[dofs] = np.arange(dofs.size)
        return uid

    def active_clusters(self):
        return sorted(self.dofs)

    def total_active_dofs(self):
        return sum(len(d) for d in self.dofs.values())

    def _key(self, i, j):
        return ((i, j), False) if i <= j else ((j, i), True)

    def has_block(self, i, j):
        return self._key(i, j)[0] in self.blocks

    def get_block(self, i, j):
        """Block oriented (rows of i, cols of j); transpose view if mirrored."""
        key, flip = self._key(i, j)
        blk = self.blocks.get(key)
        if blk is None:
            return None
        return blk.T if flip else blk

    def set_block(self, i, j, values):
        key, flip = self._key(i, j)
        values = np.asarray(values, dtype=float)
        expected = (len(self.dofs[key[0]]), len(self.dofs[key[1]]))
        stored = values.T if flip else values
        if stored.shape != expected:
            raise ValueError(f"block shape {stored.shape} != {expected}")
        self.blocks[key] = np.ascontiguousarray(stored)
        if i != j:
            self.neighbors[i].add(j)
            self.neighbors[j].add(i)

    def drop_block(self, i, j):
        key, _ = self._key(i, j)
        if key in self.blocks:
            del self.blocks[key]
            if i != j:
                self.neighbors[i].discard(j)
                self.neighbors[j].discard(i)

    def subtract_from_block(self, i, j, delta):
        """blocks[i, j] -= delta (oriented i, j), creating the block if absent."""
        key, flip = self._key(i, j)
        update = delta.T if flip else delta
        blk = self.blocks.get(key)
        if blk is None:
            self.set_block(key[0], key[1], -np.asarray(update, dtype=float))
        else:
            blk -= update

    def remove_cluster(self, uid):
        for nb in list(self.neighbors[uid]):
            self.drop_block(uid, nb)
        self.blocks.pop((uid, uid), None)
        del self.neighbors[uid]
        self._owner[self.dofs[uid]] = -1
        del self.dofs[uid]

    def shrink_cluster(self, uid, keep_positions):
        """Restrict a cluster to a subset of its dofs (blocks updated by caller)."""
        old = self.dofs[uid]
        kept = old[np.asarray(keep_positions, dtype=np.int64)]
        gone = np.setdiff1d(old, kept, assume_unique=True)
        self._owner[gone] = -1
        self.dofs[uid] = kept
        self._pos[kept] = np.arange(kept.size)

    def merge_groups(self, groups):
        """Merge child clusters into parents; dofs concatenate in child order.

        ``groups`` must cover every active cluster exactly once.  Returns the
        new uid per group.
        """
        parent_of = {}
        offsets = {}
        new_dofs = {}
        new_uids = []
        for group in groups:
            uid = self._next
            self._next += 1
            new_uids.append(uid)
            off = 0
            parts = []
            for child in group:
                parent_of[child] = uid
                offsets[child] = off
                off += len(self.dofs[child])
                parts.append(self.dofs[child])
            new_dofs[uid] = (
                np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
            )
        if len(parent_of) != len(self.dofs):
            raise ValueError("merge groups must cover all active clusters")

        new_blocks = {}
        for (i, j), val in self.blocks.items():
            pi, pj = parent_of[i], parent_of[j]
            a, b = (pi, pj) if pi <= pj else (pj, pi)
            tgt = new_blocks.get((a, b))
            if tgt is None:
                tgt = np.zeros((len(new_dofs[a]), len(new_dofs[b])))
                new_blocks[(a, b)] = tgt
            oi, oj = offsets[i], offsets[j]
            if pi == pj:
                tgt[oi : oi + val.shape[0], oj : oj + val.shape[1]] = val
                if i != j:
                    tgt[oj : oj + val.shape[1], oi : oi + val.shape[0]] = val.T
            elif (pi, pj) == (a, b):
                tgt[oi : oi + val.shape[0], oj : oj + val.shape[1]] = val
            else:
                tgt[oj : oj + val.shape[1], oi : oi + val.shape[0]] = val.T

        self.dofs = new_dofs
        self.blocks = new_blocks
        self.neighbors = {uid: set() for uid in new_uids}
        for (a, b) in new_blocks:
            if a != b:
                self.neighbors[a].add(b)
                self.neighbors[b].add(a)
        for uid, d in new_dofs.items():
            self._owner[d] = uid
            self._pos[d] = np.arange(d.size)
        return new_uids

    def extract_block(self, rows, cols):
        """Dense copy addressed by global dofs; eliminated dofs are an error."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        for idx in (rows, cols):
            if idx.size and (idx.min() < 0 or idx.max() >= self.n):
                raise IndexError("dof index out of range")
            if idx.size and (self._owner[idx] == -1).any():
                bad = idx[self._owner[idx] == -1][0]
                raise StaleIndexError(f"dof {bad} has been eliminated")
        out = np.zeros((rows.size, cols.size))
        row_owners = self._owner[rows]
        col_owners = self._owner[cols]
        for i in np.unique(row_owners):
            rsel = np.nonzero(row_owners == i)[0]
            for j in np.unique(col_owners):
                csel = np.nonzero(col_owners == j)[0]
                blk = self.get_block(int(i), int(j))
                if blk is None:
                    continue
                sub = blk[self._pos[rows[rsel]]][:, self._pos[cols[csel]]]
                out[np.ix_(rsel, csel)] = sub
        return DenseBlock(rows, cols, out)

    @classmethod
    def from_matrix(cls, a: SymSparseMatrix, cluster_dofs):
        """Assemble the initial trailing matrix over the given partition."""
        bm = cls(a.n)
        for d in cluster_dofs:
            bm.add_cluster(d)
        if (bm._owner == -1).any():
            raise ValueError("clusters do not cover all dofs")
        k = bm._next
        cu_r = bm._owner[a.rows]
        cu_c = bm._owner[a.cols]
        pr = bm._pos[a.rows]
        pc = bm._pos[a.cols]
        swap = cu_r < cu_c
        ki = np.where(swap, cu_c, cu_r)
        kj = np.where(swap, cu_r, cu_c)
        pi = np.where(swap, pc, pr)
        pj = np.where(swap, pr, pc)
        key = ki * k + kj
        order = np.argsort(key, kind="stable")
        key, pi, pj, vals = key[order], pi[order], pj[order], a.vals[order]
        uniq, starts = np.unique(key, return_index=True)
        bounds = np.append(starts, key.size)
        for g, kk in enumerate(uniq):
            i, j = int(kk // k), int(kk % k)
            sl = slice(bounds[g], bounds[g + 1])
            blk = np.zeros((len(bm.dofs[i]), len(bm.dofs[j])))
            blk[pi[sl], pj[sl]] = vals[sl]
            if i == j:
                blk[pj[sl], pi[sl]] = vals[sl]
            bm.set_block(i, j, blk)
        for uid in bm.active_clusters():
            if not bm.has_block(uid, uid):
                bm.set_block(uid, uid, np.zeros((len(bm.dofs[uid]),) * 2))
        return bm
