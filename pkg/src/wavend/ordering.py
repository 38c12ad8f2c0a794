"""Sparsity graphs, nested dissection and the path-lemma fill oracle.

Nested dissection splits the vertex set by coordinate bisection (support
centers of the basis functions) and turns the edge cut into a vertex
separator.  Each node is ordered ``V1, V2, S``, so the permuted matrix has
empty ``(V1, V2)`` blocks and all fill stays inside the separator rows.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .sparse import anz  # noqa: F401  (part of the public ordering API)


@dataclass
class SparsityGraph:
    """Undirected graph in CSR form without self-loops."""

    N: int
    indptr: np.ndarray
    indices: np.ndarray
    coords: np.ndarray
    levels: np.ndarray
    symmetrized: bool = False

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))


def sparsity_graph(pattern, coords=None, levels=None) -> SparsityGraph:
    """Graph with one edge per off-diagonal nonzero pair.

    ``pattern`` may be a :class:`~wavend.compress.SparsityPattern` or any
    sparse/dense matrix.  A structurally unsymmetric pattern is symmetrized
    and ``symmetrized`` is set.
    """
    if hasattr(pattern, "to_csc"):
        M = pattern.to_csc()
    else:
        M = sp.csc_matrix(pattern)
    N = M.shape[0]
    S = (M != 0).astype(np.int8).tocsr()
    S.setdiag(0)
    S.eliminate_zeros()
    sym = (S != S.T).nnz == 0
    if not sym:
        S = ((S + S.T) != 0).astype(np.int8).tocsr()
    S.sort_indices()
    if coords is None:
        coords = np.zeros((N, 1))
    coords = np.asarray(coords, dtype=float).reshape(N, -1)
    levels = np.zeros(N, dtype=np.int64) if levels is None else np.asarray(levels)
    return SparsityGraph(N, S.indptr.astype(np.int64), S.indices.astype(np.int64),
                         coords, levels, symmetrized=not sym)


@dataclass
class Permutation:
    """``order[new] = old``; ``forward[old] = new``."""

    order: np.ndarray

    def __post_init__(self):
        self.order = np.asarray(self.order, dtype=np.int64)
        N = len(self.order)
        fwd = np.full(N, -1, dtype=np.int64)
        fwd[self.order] = np.arange(N)
        if np.any(fwd < 0) or not np.array_equal(np.sort(self.order), np.arange(N)):
            raise ValueError("not a permutation of 0..N-1")
        self.forward = fwd

    @property
    def inverse(self) -> np.ndarray:
        return self.order

    @property
    def N(self) -> int:
        return len(self.order)

    @classmethod
    def identity(cls, N) -> "Permutation":
        return cls(np.arange(N))

    def apply(self, A) -> sp.csc_matrix:
        """``P A P^T``."""
        A = sp.csc_matrix(A)
        return A[self.order][:, self.order].tocsc()


@dataclass
class DissectionNode:
    vertices: np.ndarray                 # all vertices of the node, in output order
    separator: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    left: "DissectionNode | None" = None
    right: "DissectionNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None

    def walk(self):
        yield self
        for c in (self.left, self.right):
            if c is not None:
                yield from c.walk()


@dataclass
class DissectionTree:
    roots: list[DissectionNode]          # one per connected component

    def nodes(self):
        for r in self.roots:
            yield from r.walk()


def minimum_degree(adj: sp.csr_matrix, vertices: np.ndarray) -> np.ndarray:
    """Exact minimum-degree order of the induced subgraph (ties: smallest vertex)."""
    sub = adj[vertices][:, vertices].tocsr()
    nb = [set(sub.indices[sub.indptr[i]:sub.indptr[i + 1]].tolist()) - {i}
          for i in range(len(vertices))]
    alive = set(range(len(vertices)))
    out = []
    while alive:
        v = min(alive, key=lambda u: (len(nb[u]), vertices[u]))
        for u in nb[v]:
            nb[u] |= nb[v]
            nb[u] -= {u, v}
        alive.remove(v)
        out.append(vertices[v])
    return np.array(out, dtype=np.int64)


def _bisect(graph: SparsityGraph, adj, verts):
    """Return ``(V1, V2, S)`` for a vertex subset."""
    X = graph.coords[verts]
    spread = X.max(axis=0) - X.min(axis=0)
    axis = int(np.argmax(spread))
    order = np.argsort(X[:, axis], kind="stable")
    k = len(verts)
    side = np.zeros(k, dtype=bool)          # True = right half
    side[order[(k + 1) // 2:]] = True
    sub = adj[verts][:, verts].tocoo()
    deg = np.bincount(sub.row, minlength=k)
    cut = (side[sub.row] != side[sub.col]) & (sub.row < sub.col)
    a, b = sub.row[cut], sub.col[cut]
    # per cut edge keep the endpoint of higher degree, ties to the smaller vertex
    take_a = (deg[a] > deg[b]) | ((deg[a] == deg[b]) & (verts[a] < verts[b]))
    sep_local = np.unique(np.where(take_a, a, b))
    in_sep = np.zeros(k, dtype=bool)
    in_sep[sep_local] = True
    V1 = verts[~side & ~in_sep]
    V2 = verts[side & ~in_sep]
    S = verts[in_sep]
    return V1, V2, S


def _dissect(graph, adj, verts, leaf_size):
    if len(verts) <= leaf_size:
        return DissectionNode(minimum_degree(adj, verts))
    V1, V2, S = _bisect(graph, adj, verts)
    left = _dissect(graph, adj, V1, leaf_size) if len(V1) else None
    right = _dissect(graph, adj, V2, leaf_size) if len(V2) else None
    # finer functions first, the coarsest (most connected) last
    S = S[np.lexsort((S, -graph.levels[S]))]
    parts = [c.vertices for c in (left, right) if c is not None] + [S]
    return DissectionNode(np.concatenate(parts), S, left, right)


def nested_dissection(graph: SparsityGraph, leaf_size: int = 32):
    """Nested-dissection permutation and its dissection tree."""
    if leaf_size < 1:
        raise ValueError("leaf_size must be at least 1")
    adj = graph.adjacency()
    ncomp, label = connected_components(adj, directed=False)
    # components in order of their smallest vertex
    first = np.full(ncomp, graph.N, dtype=np.int64)
    np.minimum.at(first, label, np.arange(graph.N))
    roots = []
    for c in np.argsort(first, kind="stable"):
        verts = np.flatnonzero(label == c)
        roots.append(_dissect(graph, adj, verts, leaf_size))
    order = np.concatenate([r.vertices for r in roots]) if roots else np.zeros(0, dtype=np.int64)
    return Permutation(order), DissectionTree(roots)


def levelwise_ordering(N: int) -> Permutation:
    """The basis' own levelwise order."""
    return Permutation.identity(N)


def check_separators(graph: SparsityGraph, tree: DissectionTree) -> bool:
    """True if no node has an edge between its two halves."""
    adj = graph.adjacency()
    for node in tree.nodes():
        if node.left is None or node.right is None:
            continue
        if adj[node.left.vertices][:, node.right.vertices].nnz:
            return False
    return True


def fill_in_oracle(graph: SparsityGraph, perm: Permutation, cutoff: int = 512) -> sp.csc_matrix:
    """Factor pattern predicted by the path lemma, in permuted numbering.

    ``L[i, j]`` (``i > j``) is nonzero iff ``i`` and ``j`` are joined by a path
    whose interior vertices all come before ``j``.  The diagonal is included.
    Intended for testing only.
    """
    N = graph.N
    if N > cutoff:
        raise ValueError(f"fill oracle refuses N = {N} > {cutoff}")
    pos = perm.forward
    rows, cols = [], []
    for jn in range(N):
        j = perm.order[jn]
        seen = {j}
        queue = deque([j])
        rows.append(jn)
        cols.append(jn)
        while queue:
            v = queue.popleft()
            for u in graph.neighbors(v):
                u = int(u)
                if u in seen:
                    continue
                seen.add(u)
                if pos[u] > jn:
                    rows.append(pos[u])
                    cols.append(jn)
                else:
                    queue.append(u)
    data = np.ones(len(rows))
    L = sp.csc_matrix((data, (rows, cols)), shape=(N, N))
    L.sort_indices()
    return L
