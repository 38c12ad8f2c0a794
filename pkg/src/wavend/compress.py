"""A-priori compression of wavelet Galerkin matrices.

A pair of basis functions is discarded before anything is computed when

1. both levels are positive and their supports are farther apart than
   ``B(j, j')``, or
2. the levels differ, the supports are at most ``2**-min(j, j')`` apart and the
   distance between the finer support and the coarser singular support
   exceeds ``Bs(j, j')``.

Everything else is assembled.  Entries are formed in the orthonormal leaf
basis from a table of leaf-pair integrals (see :mod:`wavend.quadrature`) and
contracted with the per-cell coefficient tables of the basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.signal import fftconvolve

from .kernels import KernelSpec
from .quadrature import offset_table
from .wavelet import WaveletBasis, forward_transform


class ConstraintError(ValueError):
    """Compression parameters violate ``a > 1`` or ``d < delta < dtilde + 2q``."""


# ---------------------------------------------------------------------------
# leaf-level operator


class LeafOperator:
    """Galerkin matrix of a radial kernel in the orthonormal leaf basis.

    Entries are looked up from the offset table; nothing of size ``N**2`` is
    stored.  For the fractional Laplacian the matrix is the graph Laplacian
    with weights ``W(p)``; otherwise it is ``W(p)`` itself.
    """

    def __init__(self, kernel: KernelSpec, tree):
        if kernel.dim != tree.dim:
            raise ValueError(f"kernel is {kernel.dim}D but the tree is {tree.dim}D")
        self.kernel = kernel
        self.tree = tree
        n = tree.dim
        M = 1 << tree.max_level
        h = tree.leaf_width
        W = offset_table(kernel, h, M)
        self.difference = kernel.difference_form
        if self.difference:
            W.flat[0] = 0.0
        elif not np.isfinite(W.flat[0]):
            raise ValueError("kernel is not integrable over a leaf pair")
        self.table = W
        self.scale = h ** -n
        self.index = tree.levels[-1].index
        self.grid_shape = (M,) * n
        mirror = np.abs(np.arange(-(M - 1), M))
        self._full = W[np.ix_(*([mirror] * n))]
        if self.difference:
            mask = np.zeros(self.grid_shape)
            mask[tuple(self.index.T)] = 1.0
            conv = fftconvolve(mask, self._full, mode="same")
            self.diag = conv[tuple(self.index.T)]
        else:
            self.diag = None

    @property
    def size(self) -> int:
        return len(self.index)

    def block(self, rows, cols) -> np.ndarray:
        """Entries at broadcast leaf rows/cols; negative rows/cols give 0."""
        rows, cols = np.broadcast_arrays(np.asarray(rows), np.asarray(cols))
        shape = rows.shape
        rows, cols = rows.reshape(-1), cols.reshape(-1)
        off = np.abs(self.index[rows] - self.index[cols])
        val = self.table[tuple(np.moveaxis(off, -1, 0))]
        if self.difference:
            val = -val
            same = rows == cols
            val[same] = self.diag[rows[same]]
        val = val * self.scale
        val[(rows < 0) | (cols < 0)] = 0.0
        return val.reshape(shape)

    def dense(self) -> np.ndarray:
        r = np.arange(self.size)
        return self.block(r[:, None], r[None, :])

    def matvec(self, V) -> np.ndarray:
        """``S @ V`` by FFT convolution on the leaf grid; ``V`` is (N,) or (N, m)."""
        V = np.asarray(V, dtype=float)
        single = V.ndim == 1
        V2 = V[:, None] if single else V
        n = self.tree.dim
        grid = np.zeros(self.grid_shape + (V2.shape[1],))
        grid[tuple(self.index.T)] = V2
        kern = self._full.reshape(self._full.shape + (1,))
        conv = fftconvolve(grid, kern, mode="same", axes=tuple(range(n)))
        out = conv[tuple(self.index.T)]
        if self.difference:
            out = self.diag[:, None] * V2 - out
        out *= self.scale
        return out[:, 0] if single else out


def leaf_operator(kernel: KernelSpec, basis: WaveletBasis) -> LeafOperator:
    """Leaf operator cached on the basis, one per kernel object."""
    cache = basis.__dict__.setdefault("_leaf_ops", {})
    op = cache.get(id(kernel))
    if op is None or op.kernel is not kernel:
        op = LeafOperator(kernel, basis.tree)
        cache[id(kernel)] = op
    return op


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class CompressionParams:
    a: float
    d: int
    dtilde: int
    delta: float
    q: float
    J: int

    def __post_init__(self):
        # a = 1 is accepted for exploration; the CLI insists on a > 1
        if not self.a >= 1:
            raise ConstraintError(f"a must exceed 1, got {self.a}")
        lo, hi = self.d, self.dtilde + 2 * self.q
        if not lo < self.delta < hi:
            raise ConstraintError(
                f"delta must satisfy d < delta < dtilde + 2q, i.e. {lo} < delta < {hi:g}; got {self.delta}")
        if self.dtilde + self.q <= 0 or self.dtilde + 2 * self.q <= 0:
            raise ConstraintError("dtilde + 2q must be positive")

    @classmethod
    def for_basis(cls, basis: WaveletBasis, kernel: KernelSpec, a: float = 1.25,
                  delta: float | None = None) -> "CompressionParams":
        q = kernel.q
        if delta is None:
            delta = default_delta(basis.d, basis.dtilde, q)
        return cls(a=a, d=basis.d, dtilde=basis.dtilde, delta=delta, q=q,
                   J=basis.tree.max_level)


def default_delta(d, dtilde, q) -> float:
    return (d + dtilde + 2 * q) / 2


def cutoff_parameters(p: CompressionParams, j: int, jp: int) -> tuple[float, float]:
    """Cut-off distances ``(B, Bs)`` for a level pair."""
    if not (0 <= j <= p.J and 0 <= jp <= p.J):
        raise ValueError(f"levels must lie in [0, {p.J}]")
    dt, q, dl, J = p.dtilde, p.q, p.delta, p.J
    lo, hi = min(j, jp), max(j, jp)
    B = p.a * max(2.0 ** -lo,
                  2.0 ** ((2 * J * (dl - q) - (j + jp) * (dl + dt)) / (2 * (dt + q))))
    Bs = p.a * max(2.0 ** -hi,
                   2.0 ** ((2 * J * (dl - q) - (j + jp) * dl - hi * dt) / (dt + 2 * q)))
    return B, Bs


# ---------------------------------------------------------------------------
# pattern


@dataclass
class SparsityPattern:
    """Retained index pairs in column-major order (sorted by column, then row)."""

    N: int
    rows: np.ndarray
    cols: np.ndarray
    symmetric: bool

    @property
    def nnz(self) -> int:
        return len(self.rows)

    @property
    def anz(self) -> float:
        return self.nnz / self.N

    def to_csc(self) -> sp.csc_matrix:
        data = np.ones(self.nnz)
        return sp.csc_matrix((data, (self.rows, self.cols)), shape=(self.N, self.N))

    def pairs(self) -> set:
        return set(zip(self.rows.tolist(), self.cols.tolist()))


def _group_boxes(basis, g):
    lo, hi = basis.tree.grid_boxes(g.cell_level)
    return lo[g.cell_rows], hi[g.cell_rows]


def _retained_cell_pairs(basis: WaveletBasis, p: CompressionParams, ga, gb, chunk=1 << 22):
    """Cell pairs ``(pa, pb)`` of two groups that survive both compressions."""
    tree = basis.tree
    ja, jb = ga.level, gb.level
    loa, hia = _group_boxes(basis, ga)
    lob, hib = _group_boxes(basis, gb)
    B, Bs = cutoff_parameters(p, ja, jb)
    unit = 2.0 ** -tree.max_level       # finest grid spacing relative to the root side
    guard = 2.0 ** -min(ja, jb)
    out_a, out_b = [np.zeros(0, dtype=np.int64)], [np.zeros(0, dtype=np.int64)]
    nb = len(lob)
    step = max(1, chunk // max(nb, 1))
    for s0 in range(0, len(loa), step):
        la, ha = loa[s0:s0 + step, None, :], hia[s0:s0 + step, None, :]
        gap = np.maximum(0, np.maximum(lob[None] - ha, la - hib[None]))
        dist = np.sqrt(np.sum(gap * gap, axis=-1, dtype=np.int64).astype(float)) * unit
        drop = np.zeros(dist.shape, dtype=bool)
        if ja > 0 and jb > 0:
            drop |= dist > B
        if ja != jb:
            # singular support coincides with the support box
            drop |= (dist <= guard) & (dist > Bs)
        ia, ib = np.nonzero(~drop)
        out_a.append(ia + s0)
        out_b.append(ib)
    return np.concatenate(out_a), np.concatenate(out_b)


def _group_offsets(g):
    return g.start + np.concatenate([[0], np.cumsum(g.ncomp)[:-1]])


def _expand(ga, gb, pa, pb):
    """Function index pairs generated by cell pairs."""
    offa, offb = _group_offsets(ga), _group_offsets(gb)
    rows, cols = [np.zeros(0, dtype=np.int64)], [np.zeros(0, dtype=np.int64)]
    for ca in range(ga.coef.shape[2]):
        for cb in range(gb.coef.shape[2]):
            ok = (ca < ga.ncomp[pa]) & (cb < gb.ncomp[pb])
            rows.append(offa[pa[ok]] + ca)
            cols.append(offb[pb[ok]] + cb)
    return np.concatenate(rows), np.concatenate(cols)


def _sort_csc(N, rows, cols):
    key = cols.astype(np.int64) * N + rows
    order = np.argsort(key, kind="stable")
    return rows[order], cols[order], order


def compression_pattern(basis: WaveletBasis, p: CompressionParams) -> SparsityPattern:
    """Index pairs kept by the a-priori compression rule."""
    if p.J != basis.tree.max_level or p.dtilde != basis.dtilde or p.d != basis.d:
        raise ValueError("compression parameters do not match the basis")
    rows, cols = [], []
    for ga in basis.groups:
        for gb in basis.groups:
            pa, pb = _retained_cell_pairs(basis, p, ga, gb)
            r, c = _expand(ga, gb, pa, pb)
            rows.append(r)
            cols.append(c)
    N = basis.size
    r, c, _ = _sort_csc(N, np.concatenate(rows), np.concatenate(cols))
    return SparsityPattern(N, r, c, symmetric=True)


# ---------------------------------------------------------------------------
# entries


def assemble_entry(kernel: KernelSpec, basis: WaveletBasis, lam: int, lamp: int) -> float:
    """Galerkin entry ``(A psi_lamp, psi_lam)``."""
    op = leaf_operator(kernel, basis)
    ra, ca = basis.leaf_coefficients(lam)
    rb, cb = basis.leaf_coefficients(lamp)
    return float(ca @ op.block(ra[:, None], rb[None, :]) @ cb)


def assemble_dense(kernel: KernelSpec, basis: WaveletBasis) -> np.ndarray:
    """Full Galerkin matrix ``T S T^T`` (oracle; O(N**2) memory)."""
    op = leaf_operator(kernel, basis)
    if basis.size > 8192:
        raise ValueError("dense assembly is an oracle for N <= 8192")
    S = op.dense()
    h = basis.tree.leaf_width ** (basis.dim / 2)
    T = forward_transform(basis, np.eye(basis.size)) / h
    A = T @ S @ T.T
    return 0.5 * (A + A.T)


@dataclass
class AssemblyStats:
    N: int
    nnz: int
    anz: float


def _leaf_matrix(basis, g):
    """Dense (N, size) leaf coefficients of all functions of a group."""
    U = np.zeros((basis.tree.n_leaves, g.size))
    offs = _group_offsets(g) - g.start
    for p in range(len(g.cell_rows)):
        lv = g.leaves[p]
        keep = lv >= 0
        k = g.ncomp[p]
        U[lv[keep], offs[p]:offs[p] + k] = g.coef[p, keep, :k]
    return U


def assemble_compressed(kernel: KernelSpec, basis: WaveletBasis, p: CompressionParams,
                        pattern: SparsityPattern | None = None, wide: int = 256,
                        block_budget: int = 1 << 22):
    """Compressed Galerkin matrix as CSC plus ``AssemblyStats``.

    Groups whose cells hold more than ``wide`` leaves are applied to the leaf
    operator by FFT and transformed; all other retained cell pairs are
    contracted blockwise.  Only pairs with ``level(a) <= level(b)`` are
    computed and the rest mirrored, which makes the result exactly symmetric.
    """
    op = leaf_operator(kernel, basis)
    N = basis.size
    h = basis.tree.leaf_width ** (basis.dim / 2)
    rows, cols, vals = [], [], []
    full_rows = {}
    for ia, ga in enumerate(basis.groups):
        if ga.size and ga.leaves.shape[1] > wide:
            Y = op.matvec(_leaf_matrix(basis, ga))
            full_rows[ia] = forward_transform(basis, Y / h)     # (N, size) columns
    for ia, ga in enumerate(basis.groups):
        offa = _group_offsets(ga)
        for ib in range(ia, len(basis.groups)):
            gb = basis.groups[ib]
            pa, pb = _retained_cell_pairs(basis, p, ga, gb)
            if len(pa) == 0:
                continue
            r, c = _expand(ga, gb, pa, pb)
            if ia in full_rows:
                v = full_rows[ia][c, r - ga.start]
            else:
                v = _block_values(op, ga, gb, pa, pb, block_budget)
            rows.append(r)
            cols.append(c)
            vals.append(v)
            if ib != ia:
                rows.append(c)
                cols.append(r)
                vals.append(v)
    r, c, order = _sort_csc(N, np.concatenate(rows), np.concatenate(cols))
    v = np.concatenate(vals)[order]
    A = sp.csc_matrix((v, r, np.searchsorted(c, np.arange(N + 1))), shape=(N, N))
    # diagonal blocks are computed from both sides; average away roundoff
    A = ((A + A.T) * 0.5).tocsc()
    A.sort_indices()
    A.eliminate_zeros()
    return A, AssemblyStats(N, A.nnz, A.nnz / N)


def _block_values(op, ga, gb, pa, pb, budget):
    La, Lb = ga.leaves.shape[1], gb.leaves.shape[1]
    step = max(1, budget // (La * Lb))
    out = []
    for s0 in range(0, len(pa), step):
        a = pa[s0:s0 + step]
        b = pb[s0:s0 + step]
        S = op.block(ga.leaves[a][:, :, None], gb.leaves[b][:, None, :])
        E = np.matmul(np.matmul(ga.coef[a].transpose(0, 2, 1), S), gb.coef[b])
        out.append(E)
    E = np.concatenate(out)                 # (P, Ca, Cb)
    vals = [np.zeros(0)]
    for ca in range(ga.coef.shape[2]):
        for cb in range(gb.coef.shape[2]):
            ok = (ca < ga.ncomp[pa]) & (cb < gb.ncomp[pb])
            vals.append(E[ok, ca, cb])
    return np.concatenate(vals)


# ---------------------------------------------------------------------------
# decay estimate


@dataclass
class DecayReport:
    """Measured entries against ``2^{-(j+j')(dtilde+n/2)} / dist^{n+2q+2 dtilde}``."""

    pairs: np.ndarray
    levels: np.ndarray          # (m, 2)
    dist: np.ndarray
    measured: np.ndarray
    bound: np.ndarray
    exponent: float
    fit_mask: np.ndarray
    fitted_constant: float

    @property
    def ratio(self) -> np.ndarray:
        return self.measured / self.bound

    @property
    def max_violation(self) -> float:
        """Largest ``ratio / fitted_constant``; at most 1 when the estimate holds."""
        return float(self.ratio.max() / self.fitted_constant)

    @property
    def violations(self) -> int:
        return int(np.sum(self.ratio > self.fitted_constant * (1 + 1e-12)))

    def table(self):
        """Rows ``(lam, lam', j, j', dist, |entry|, bound, ratio)``."""
        return np.column_stack([self.pairs, self.levels, self.dist, self.measured, self.bound,
                                self.ratio])


def support_distances(basis: WaveletBasis, rows, cols) -> np.ndarray:
    """Support distances of function pairs, in units of the root side."""
    tree = basis.tree
    lo = np.empty((basis.size, tree.dim), dtype=np.int64)
    hi = np.empty_like(lo)
    for cl in np.unique(basis.cell_level):
        sel = basis.cell_level == cl
        l, h = tree.grid_boxes(cl)
        lo[sel], hi[sel] = l[basis.cell_row[sel]], h[basis.cell_row[sel]]
    rows, cols = np.asarray(rows), np.asarray(cols)
    gap = np.maximum(0, np.maximum(lo[cols] - hi[rows], lo[rows] - hi[cols]))
    return np.sqrt(np.sum(gap * gap, axis=-1).astype(float)) * 2.0 ** -tree.max_level


def decay_bound(basis: WaveletBasis, kernel: KernelSpec, j, jp, dist):
    n = basis.dim
    expo = n + kernel.order2q + 2 * basis.dtilde
    return 2.0 ** (-(np.asarray(j) + np.asarray(jp)) * (basis.dtilde + n / 2)) / np.asarray(dist) ** expo


def verify_decay(basis: WaveletBasis, kernel: KernelSpec, sample_pairs, dense=None,
                 fit_mask=None) -> DecayReport:
    """Compare entries of separated pairs with the decay estimate.

    The constant is fitted (as the maximal ratio) on ``fit_mask``; by default
    on the pairs whose finer level is one of the two coarsest finer levels
    present in the sample.
    """
    pairs = np.asarray(sample_pairs, dtype=np.int64).reshape(-1, 2)
    r, c = pairs[:, 0], pairs[:, 1]
    dist = support_distances(basis, r, c)
    if np.any(dist <= 0):
        raise ValueError("decay verification needs pairs with positive support distance")
    if dense is not None:
        vals = np.asarray(dense)[r, c]
    else:
        vals = np.array([assemble_entry(kernel, basis, int(a), int(b)) for a, b in pairs])
    j, jp = basis.level[r], basis.level[c]
    bound = decay_bound(basis, kernel, j, jp, dist)
    ratio = np.abs(vals) / bound
    if fit_mask is None:
        top = np.maximum(j, jp)
        fit_mask = top <= top.min() + 1
    fit_mask = np.asarray(fit_mask, dtype=bool)
    return DecayReport(pairs, np.column_stack([j, jp]), dist, np.abs(vals), bound,
                       basis.dim + kernel.order2q + 2 * basis.dtilde, fit_mask,
                       float(ratio[fit_mask].max()))
