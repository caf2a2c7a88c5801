"""Modified nested-dissection ordering and interface clustering.

Each vertex carries a tag (S, L, R): S is the separator (or interior) the
vertex currently belongs to, L/R point at the two interiors a separator
vertex touches.  Splitting interior (l, k) updates the tags of the interior
and of all boundary vertices pointing at it; groups of vertices with
identical tags are the interface clusters.  Snapshots of the tag arrays
after every split round give the per-level clusters and the merge tree.

Separator ids (l, k) are encoded as (l << 32) | k in int64 arrays; 0 means
"no tag".
"""

import math
from typing import NamedTuple, Optional

import numpy as np

from .sparsecore import Graph

__all__ = [
    "SepId",
    "VertexTag",
    "Cluster",
    "ClusterHierarchy",
    "vertex_separator_geometric",
    "vertex_separator_graph",
    "order_and_cluster",
    "default_levels",
    "load_coords",
]

_NO_TAG = 0


def _enc(level, index):
    return (level << 32) | index


def _dec(tag):
    return (int(tag) >> 32, int(tag) & 0xFFFFFFFF)


class SepId(NamedTuple):
    level: int
    index: int


class VertexTag(NamedTuple):
    sep: SepId
    left: Optional[SepId]
    right: Optional[SepId]


class Cluster(NamedTuple):
    key: tuple
    vertices: np.ndarray
    sep: SepId


def _decode_opt(tag):
    return None if tag == _NO_TAG else SepId(*_dec(tag))


# ---------------------------------------------------------------------------
# Vertex separators


def _empty_triple():
    e = np.empty(0, dtype=np.int64)
    return e, e.copy(), e.copy()


def _subset_edges(graph, verts):
    """All (position-in-verts, neighbor) adjacency pairs with source in verts."""
    starts = graph.indptr[verts]
    counts = graph.indptr[verts + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    owners = np.repeat(np.arange(verts.size), counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    idx = np.repeat(starts, counts) + offs
    return owners, graph.indices[idx]


def _adjacent_subset(graph, first, second):
    """Members of ``first`` with at least one neighbor in ``second``."""
    if first.size == 0 or second.size == 0:
        return np.empty(0, dtype=np.int64)
    mask = np.zeros(graph.n, dtype=bool)
    mask[second] = True
    owners, nbrs = _subset_edges(graph, first)
    flags = np.zeros(first.size, dtype=bool)
    flags[owners[mask[nbrs]]] = True
    return first[flags]


def vertex_separator_geometric(graph: Graph, sub, coords):
    """Split ``sub`` at the coordinate median of its largest-span axis.

    Returns disjoint (left, mid, right): the first part is the lower half in
    sorted-coordinate order (ties broken by vertex index), mid is the subset
    of the first part adjacent to the second, left the remainder.  Degenerate
    coordinates fall back to the graph separator.
    """
    sub = np.asarray(sub, dtype=np.int64)
    if sub.size == 0:
        return _empty_triple()
    pts = np.asarray(coords, dtype=float)[sub]
    if pts.ndim == 1:
        pts = pts[:, None]
    spans = pts.max(axis=0) - pts.min(axis=0)
    axis = int(np.argmax(spans))
    if sub.size > 1 and spans[axis] <= 0.0:
        return vertex_separator_graph(graph, sub)
    order = np.lexsort((sub, pts[:, axis]))
    half = (sub.size + 1) // 2
    first = sub[order[:half]]
    second = np.sort(sub[order[half:]])
    mid = np.sort(_adjacent_subset(graph, first, second))
    left = np.setdiff1d(first, mid, assume_unique=False)
    return left, mid, second


def vertex_separator_graph(graph: Graph, sub):
    """BFS-level bisection with boundary-vertex extraction.

    Connected input: BFS levels from a pseudo-peripheral vertex are cut at
    the level boundary closest to half the vertices; the first side's
    boundary becomes the separator.  Disconnected input: components are
    packed first-fit-decreasing into the two sides, no separator needed.
    """
    sub = np.sort(np.asarray(sub, dtype=np.int64))
    if sub.size == 0:
        return _empty_triple()
    if sub.size == 1:
        e = np.empty(0, dtype=np.int64)
        return sub.copy(), e, e.copy()
    comps = _components(graph, sub)
    if len(comps) > 1:
        return _pack_components(comps)
    levels = _bfs_levels(graph, sub)
    sizes = np.array([lv.size for lv in levels])
    cums = np.cumsum(sizes)
    target = sub.size / 2.0
    cut = int(np.argmin(np.abs(cums[:-1] - target))) + 1
    first = np.concatenate(levels[:cut])
    second = np.sort(np.concatenate(levels[cut:]))
    mid = np.sort(_adjacent_subset(graph, first, second))
    left = np.setdiff1d(first, mid, assume_unique=False)
    return left, mid, second


def _pack_components(comps):
    order = sorted(range(len(comps)), key=lambda i: (-comps[i].size, i))
    bins = ([], [])
    loads = [0, 0]
    for i in order:
        side = 0 if loads[0] <= loads[1] else 1
        bins[side].append(comps[i])
        loads[side] += comps[i].size
    left = np.sort(np.concatenate(bins[0]))
    right = np.sort(np.concatenate(bins[1])) if bins[1] else np.empty(0, np.int64)
    return left, np.empty(0, dtype=np.int64), right


def _components(graph, sub):
    """Connected components of the induced subgraph, in discovery order."""
    in_sub = np.zeros(graph.n, dtype=bool)
    in_sub[sub] = True
    unvisited = in_sub.copy()
    comps = []
    ptr = 0
    while ptr < sub.size:
        seed = sub[ptr]
        ptr += 1
        if not unvisited[seed]:
            continue
        unvisited[seed] = False
        frontier = np.array([seed], dtype=np.int64)
        parts = [frontier]
        while frontier.size:
            _, nbrs = _subset_edges(graph, frontier)
            nxt = np.unique(nbrs[unvisited[nbrs]])
            unvisited[nxt] = False
            if nxt.size:
                parts.append(nxt)
            frontier = nxt
        comps.append(np.sort(np.concatenate(parts)))
    return comps


def _bfs_levels(graph, sub):
    """BFS levels over a connected subset, from a pseudo-peripheral vertex."""
    in_sub = np.zeros(graph.n, dtype=bool)
    in_sub[sub] = True
    levels = _bfs_from(graph, sub[0], in_sub)
    start = levels[-1][0]  # farthest level, lowest id
    if start != sub[0]:
        levels = _bfs_from(graph, start, in_sub)
    return levels


def _bfs_from(graph, seed, in_sub):
    visited = ~in_sub  # treat everything outside the subset as seen
    visited = visited.copy()
    visited[seed] = True
    frontier = np.array([seed], dtype=np.int64)
    levels = [frontier]
    while True:
        _, nbrs = _subset_edges(graph, frontier)
        nxt = np.unique(nbrs[~visited[nbrs]])
        if nxt.size == 0:
            return levels
        visited[nxt] = True
        levels.append(nxt)
        frontier = nxt


# ---------------------------------------------------------------------------
# Ordering and clustering


def default_levels(n):
    """Level count targeting ~64-dof leaf interiors."""
    if n < 128:
        return 1
    return max(1, int(math.floor(math.log2(n / 64.0))))


class ClusterHierarchy:
    """Per-level interface clusters plus the merge tree linking them.

    Level ``levels`` holds the finest clusters (the state in which
    factorization starts); level 1 is the root.  ``parent(level, i)`` maps a
    cluster to its merged parent one level up the elimination order;
    children are kept in key order so a parent's vertex list is exactly the
    concatenation of its children's lists.
    """

    def __init__(self, n, levels, level_keys, level_verts, level_parent, final_tags):
        self.n = n
        self.levels = levels
        self._keys = level_keys
        self._verts = level_verts
        self._parent = level_parent
        self._tags = final_tags

    def interfaces(self, level):
        keys = self._keys[level - 1]
        verts = self._verts[level - 1]
        return [
            Cluster(tuple(k), v, SepId(*_dec(k[0]))) for k, v in zip(keys, verts)
        ]

    def n_clusters(self, level):
        return len(self._keys[level - 1])

    def parent(self, level, idx):
        if level <= 1:
            raise ValueError("level 1 clusters have no parent")
        return self._parent[level - 1][idx]

    def children(self, level, idx):
        if level >= self.levels:
            return []
        nxt = self._parent[level]
        return [i for i, p in enumerate(nxt) if p == idx]

    def tag(self, v):
        s, l, r = (arr[v] for arr in self._tags)
        return VertexTag(SepId(*_dec(s)), _decode_opt(l), _decode_opt(r))

    def separator_count(self):
        return sum(
            1
            for k in self._keys[self.levels - 1]
            if k[1] != _NO_TAG or k[2] != _NO_TAG
        )


def order_and_cluster(graph: Graph, coords=None, levels=None, backend="auto"):
    """Run the tag-update ordering over ``graph`` and build the hierarchy.

    ``backend`` chooses the vertex-separator routine: "geo" (needs coords),
    "graph", or "auto" (geo when coords are given).
    """
    n = graph.n
    if levels is None or levels == 0:
        levels = default_levels(n)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if backend not in ("auto", "geo", "graph"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "auto":
        backend = "geo" if coords is not None else "graph"
    if backend == "geo":
        if coords is None:
            raise ValueError("geometric backend requires coordinates")
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.shape[0] != n:
            raise ValueError("coordinate count must equal vertex count")

    sep = np.full(n, _enc(1, 1), dtype=np.int64)
    left = np.zeros(n, dtype=np.int64)
    right = np.zeros(n, dtype=np.int64)
    snaps = [(sep.copy(), left.copy(), right.copy())]
    in_b = np.zeros(n, dtype=bool)

    for lvl in range(1, levels):
        for k in range(1, 2 ** (lvl - 1) + 1):
            sid = _enc(lvl, k)
            interior = np.nonzero(sep == sid)[0]
            if interior.size <= 1:
                continue
            boundary = np.nonzero((left == sid) | (right == sid))[0]
            sub = np.concatenate([interior, boundary])
            if backend == "geo":
                lw, mw, rw = vertex_separator_geometric(graph, sub, coords)
            else:
                lw, mw, rw = vertex_separator_graph(graph, sub)
            in_b[boundary] = True
            left_id = _enc(lvl + 1, 2 * k - 1)
            right_id = _enc(lvl + 1, 2 * k)

            sep[lw[~in_b[lw]]] = left_id
            sep[rw[~in_b[rw]]] = right_id
            mw_int = mw[~in_b[mw]]  # new separator vertices keep S = (lvl, k)
            left[mw_int] = left_id
            right[mw_int] = right_id

            lw_b = lw[in_b[lw]]
            on_left = left[lw_b] == sid
            left[lw_b[on_left]] = left_id
            right[lw_b[~on_left]] = left_id
            rw_b = rw[in_b[rw]]
            on_left = left[rw_b] == sid
            left[rw_b[on_left]] = right_id
            right[rw_b[~on_left]] = right_id

            in_b[boundary] = False
        snaps.append((sep.copy(), left.copy(), right.copy()))

    return _build_hierarchy(n, levels, snaps)


def _build_hierarchy(n, levels, snaps):
    level_keys = [None] * levels
    level_verts = [None] * levels
    level_parent = [None] * levels

    s, l, r = snaps[levels - 1]
    mat = np.column_stack([s, l, r])
    uniq, inverse = np.unique(mat, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    starts = np.searchsorted(inverse[order], np.arange(uniq.shape[0]))
    bounds = np.append(starts, n)
    level_keys[levels - 1] = [tuple(int(x) for x in row) for row in uniq]
    level_verts[levels - 1] = [
        order[bounds[i] : bounds[i + 1]] for i in range(uniq.shape[0])
    ]

    for li in range(levels - 2, -1, -1):
        s, l, r = snaps[li]
        child_keys = level_keys[li + 1]
        child_verts = level_verts[li + 1]
        groups = {}
        for ci, cv in enumerate(child_verts):
            rep = cv[0]
            pk = (int(s[rep]), int(l[rep]), int(r[rep]))
            groups.setdefault(pk, []).append(ci)
        parent_keys = sorted(groups)
        parent_index = {pk: i for i, pk in enumerate(parent_keys)}
        parent_arr = [0] * len(child_keys)
        verts = []
        for pk in parent_keys:
            children = groups[pk]  # ascending child index == key order
            for ci in children:
                parent_arr[ci] = parent_index[pk]
            verts.append(np.concatenate([child_verts[ci] for ci in children]))
        level_keys[li] = parent_keys
        level_verts[li] = verts
        level_parent[li + 1] = parent_arr

    return ClusterHierarchy(n, levels, level_keys, level_verts, level_parent, snaps[-1])


def load_coords(path, n):
    """Read per-vertex coordinates: one line per vertex, 2 or 3 real columns."""
    data = np.loadtxt(path, dtype=float, ndmin=2)
    if data.shape[0] != n:
        raise ValueError(f"coordinate file has {data.shape[0]} lines, expected {n}")
    if data.shape[1] not in (2, 3):
        raise ValueError(f"expected 2 or 3 coordinate columns, got {data.shape[1]}")
    return data
