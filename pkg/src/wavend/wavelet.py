"""Orthonormal piecewise-constant multiwavelets on a dyadic cell tree.

Every cell owns the span of its children's scaling functions.  The moments of
that span against the polynomials of total degree ``< dtilde`` are split by an
SVD: the left singular vectors with nonzero singular values become the cell's
scaling functions, the rest are its wavelets.  Wavelets are therefore
orthogonal to all polynomials of degree ``< dtilde`` and the whole basis is
orthonormal in L2.  A wavelet created on a cell of level ``l`` has level
``l + 1``; the root's scaling functions form level 0.

Coefficients are expressed in the orthonormal leaf basis
``phi_i = 1_{leaf_i} / h**(n/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np
import scipy.sparse as sp

from .meshgeom import Cell, CellTree


class CapacityError(ValueError):
    """The tree has too few leaves for the requested number of moments."""


@dataclass(frozen=True)
class WaveletIndex:
    level: int
    key: tuple[int, ...]
    component: int
    support: Cell

    @property
    def singular_support(self) -> Cell:
        # piecewise constants: the box of the support is used for both
        return self.support


@dataclass
class FunctionGroup:
    """Basis functions of one level, stored cell by cell.

    ``leaves[p]`` lists the leaf rows under the ``p``-th carrying cell (padded
    with -1) and ``coef[p, :, c]`` holds the leaf coefficients of its ``c``-th
    function.
    """

    level: int
    cell_level: int
    cell_rows: np.ndarray
    leaves: np.ndarray
    coef: np.ndarray
    ncomp: np.ndarray
    start: int

    @property
    def size(self) -> int:
        return int(self.ncomp.sum())


@dataclass
class _CellStep:
    gather: np.ndarray      # positions in the child level's scaling vector
    U: np.ndarray           # (k, k) orthogonal
    r: int                  # number of scaling functions kept
    scal_pos: np.ndarray    # positions in this level's scaling vector
    wav_idx: np.ndarray     # global indices of the cell's wavelets


@dataclass
class WaveletBasis:
    tree: CellTree
    dtilde: int
    d: int
    groups: list[FunctionGroup] = field(repr=False)
    level: np.ndarray = field(repr=False)
    cell_level: np.ndarray = field(repr=False)
    cell_row: np.ndarray = field(repr=False)
    component: np.ndarray = field(repr=False)
    group_pos: np.ndarray = field(repr=False)
    steps: list[list[_CellStep]] = field(repr=False)
    n_scaling: list[int] = field(repr=False)
    orthonormal: bool = True

    @property
    def size(self) -> int:
        return len(self.level)

    @property
    def dim(self) -> int:
        return self.tree.dim

    @property
    def max_level(self) -> int:
        return int(self.level.max())

    def index(self, i) -> WaveletIndex:
        cl, row = int(self.cell_level[i]), int(self.cell_row[i])
        cell = self.tree.cell(cl, row)
        return WaveletIndex(int(self.level[i]), cell.index, int(self.component[i]), cell)

    def indices(self):
        return [self.index(i) for i in range(self.size)]

    def support_centers(self) -> np.ndarray:
        out = np.empty((self.size, self.dim))
        for cl in np.unique(self.cell_level):
            sel = self.cell_level == cl
            out[sel] = self.tree.centers(cl)[self.cell_row[sel]]
        return out

    def leaf_coefficients(self, i):
        """``(leaf_rows, coefficients)`` of basis function ``i``."""
        g = self.groups[self.level[i]]
        p, c = self.group_pos[i], self.component[i]
        leaves = g.leaves[p]
        keep = leaves >= 0
        return leaves[keep], g.coef[p, keep, c]

    def leaf_values(self, i) -> np.ndarray:
        """Basis function ``i`` sampled on all leaves."""
        v = np.zeros(self.tree.n_leaves)
        rows, c = self.leaf_coefficients(i)
        v[rows] = c * self.tree.leaf_width ** (-self.dim / 2)
        return v


def monomial_exponents(n: int, dtilde: int) -> list[tuple[int, ...]]:
    """Exponents of all monomials of total degree ``< dtilde`` in ``n`` variables."""
    exps = [a for a in product(range(dtilde), repeat=n) if sum(a) < dtilde]
    exps.sort(key=lambda a: (sum(a), tuple(-v for v in a)))
    assert len(exps) == comb(dtilde - 1 + n, n)
    return exps


def _leaf_moments(tree: CellTree, leaves, center, width, exps) -> np.ndarray:
    """``int_leaf xhat**alpha dx / h**(n/2)`` with ``xhat = (x - center) / width``."""
    h = tree.leaf_width
    lo = np.asarray(tree.domain.origin) + tree.levels[-1].index[leaves] * h
    n = tree.dim
    deg = max(max(a) for a in exps) + 1
    # per-axis exact integrals of xhat**p over [lo, lo + h]
    axis = np.empty((len(leaves), n, deg))
    for a in range(n):
        t0 = (lo[:, a] - center[a]) / width
        t1 = (lo[:, a] + h - center[a]) / width
        for p in range(deg):
            axis[:, a, p] = width * (t1 ** (p + 1) - t0 ** (p + 1)) / (p + 1)
    P = np.ones((len(leaves), len(exps)))
    for col, alpha in enumerate(exps):
        for a in range(n):
            P[:, col] *= axis[:, a, alpha[a]]
    return P / h ** (n / 2)


def build_basis(tree: CellTree, dtilde: int = 1, rank_tol: float = 1e-9) -> WaveletBasis:
    """Construct the multiwavelet basis with ``dtilde`` vanishing moments."""
    if dtilde < 1:
        raise ValueError("dtilde must be at least 1")
    n = tree.dim
    J = tree.max_level
    exps = monomial_exponents(n, dtilde)
    if tree.n_leaves < len(exps):
        raise CapacityError(
            f"{tree.n_leaves} leaves cannot carry {len(exps)} polynomial moments; "
            "refine the tree or lower dtilde")

    # bottom-up pass: local bases, scaling functions and wavelets per cell
    leaf_lists = [np.array([i]) for i in range(tree.n_leaves)]
    phis = [np.ones((1, 1)) for _ in range(tree.n_leaves)]
    scal_ptr = np.arange(tree.n_leaves + 1)
    steps_rev = []
    wavelet_tables = []     # per cell level: list of (leaves, coef) per cell
    n_scaling = [0] * (J + 1)
    n_scaling[J] = tree.n_leaves
    for lev in range(J - 1, -1, -1):
        lc = tree.levels[lev]
        centers = tree.centers(lev)
        width = tree.side * 2.0 ** -lev
        new_lists, new_phis, cell_steps, table = [], [], [], []
        pos = 0
        for row in range(len(lc)):
            kids = lc.children(row)
            gather = np.concatenate([np.arange(scal_ptr[c], scal_ptr[c + 1]) for c in kids])
            leaves = np.concatenate([leaf_lists[c] for c in kids])
            k = len(gather)
            block = np.zeros((len(leaves), k))
            r0 = c0 = 0
            for c in kids:
                ph = phis[c]
                block[r0:r0 + ph.shape[0], c0:c0 + ph.shape[1]] = ph
                r0 += ph.shape[0]
                c0 += ph.shape[1]
            M = block.T @ _leaf_moments(tree, leaves, centers[row], width, exps)
            U, S, _ = np.linalg.svd(M, full_matrices=True)
            r = int(np.sum(S > rank_tol * max(S[0], 1e-300))) if len(S) else 0
            full = block @ U
            new_lists.append(leaves)
            new_phis.append(full[:, :r])
            table.append((leaves, full[:, r:]))
            cell_steps.append(_CellStep(gather, U, r, np.arange(pos, pos + r), None))
            pos += r
        n_scaling[lev] = pos
        scal_ptr = np.concatenate([[0], np.cumsum([s.r for s in cell_steps])])
        leaf_lists, phis = new_lists, new_phis
        steps_rev.append(cell_steps)
        wavelet_tables.append(table)
    steps = steps_rev[::-1]
    wavelet_tables = wavelet_tables[::-1]
    if J == 0:
        root_leaves, root_phi = np.array([0]), np.ones((1, 1))
    else:
        root_leaves, root_phi = leaf_lists[0], phis[0]

    # top-down numbering: level 0 = root scaling, level l+1 = wavelets of level-l cells
    groups = []
    level, cell_level, cell_row, comp, gpos = [], [], [], [], []
    start = 0

    def add_group(j, cl, rows, tables):
        nonlocal start
        ncomp = np.array([t[1].shape[1] for t in tables], dtype=np.int64)
        keep = ncomp > 0
        rows = np.asarray(rows)[keep]
        tables = [t for t, kp in zip(tables, keep) if kp]
        ncomp = ncomp[keep]
        L = max((len(t[0]) for t in tables), default=0)
        C = int(ncomp.max()) if len(ncomp) else 0
        lv = np.full((len(tables), L), -1, dtype=np.int64)
        cf = np.zeros((len(tables), L, C))
        for p, (lv_p, cf_p) in enumerate(tables):
            lv[p, :len(lv_p)] = lv_p
            cf[p, :cf_p.shape[0], :cf_p.shape[1]] = cf_p
        g = FunctionGroup(j, cl, rows, lv, cf, ncomp, start)
        for p in range(len(tables)):
            for c in range(ncomp[p]):
                level.append(j)
                cell_level.append(cl)
                cell_row.append(rows[p])
                comp.append(c)
                gpos.append(p)
        start += g.size
        groups.append(g)
        return g

    add_group(0, 0, [0], [(root_leaves, root_phi)])
    for lev in range(J):
        g = add_group(lev + 1, lev, np.arange(len(tree.levels[lev])), wavelet_tables[lev])
        # global indices of each cell's wavelets
        first = g.start
        counts = np.zeros(len(tree.levels[lev]), dtype=np.int64)
        counts[g.cell_rows] = g.ncomp
        offs = first + np.concatenate([[0], np.cumsum(counts)])
        for row, st in enumerate(steps[lev]):
            st.wav_idx = np.arange(offs[row], offs[row + 1])

    basis = WaveletBasis(
        tree=tree, dtilde=dtilde, d=1, groups=groups,
        level=np.array(level, dtype=np.int64),
        cell_level=np.array(cell_level, dtype=np.int64),
        cell_row=np.array(cell_row, dtype=np.int64),
        component=np.array(comp, dtype=np.int64),
        group_pos=np.array(gpos, dtype=np.int64),
        steps=steps, n_scaling=n_scaling)
    assert basis.size == tree.n_leaves
    return basis


def _as_columns(x, N):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != N:
        raise ValueError(f"expected leading dimension {N}, got {x.shape[0]}")
    return x


def forward_transform(basis: WaveletBasis, v) -> np.ndarray:
    """Leaf values to L2-orthonormal wavelet coefficients ``(f, psi_lambda)``.

    Accepts a vector or an array whose first axis runs over the leaves.
    """
    tree = basis.tree
    v = _as_columns(v, tree.n_leaves)
    s = v * tree.leaf_width ** (tree.dim / 2)
    out = np.empty_like(s)
    for lev in range(tree.max_level - 1, -1, -1):
        nxt = np.empty((basis.n_scaling[lev],) + s.shape[1:])
        for st in basis.steps[lev]:
            y = st.U.T @ s[st.gather]
            nxt[st.scal_pos] = y[:st.r]
            out[st.wav_idx] = y[st.r:]
        s = nxt
    out[:basis.n_scaling[0]] = s
    return out


def inverse_transform(basis: WaveletBasis, w) -> np.ndarray:
    """Wavelet coefficients to leaf values; exact inverse of :func:`forward_transform`."""
    tree = basis.tree
    w = _as_columns(w, tree.n_leaves)
    s = w[:basis.n_scaling[0]]
    for lev in range(tree.max_level):
        nxt = np.empty((basis.n_scaling[lev + 1],) + w.shape[1:])
        for st in basis.steps[lev]:
            y = np.concatenate([s[st.scal_pos], w[st.wav_idx]])
            nxt[st.gather] = st.U @ y
        s = nxt
    return s * tree.leaf_width ** (-tree.dim / 2)


def transform_matrix(basis: WaveletBasis) -> np.ndarray:
    """Dense orthogonal ``T`` with ``T[lambda, i]`` the coefficient on ``phi_i``."""
    N = basis.size
    h = basis.tree.leaf_width ** (basis.dim / 2)
    return forward_transform(basis, np.eye(N)) / h


def mass_matrix(basis: WaveletBasis, generic: bool = False) -> sp.csc_matrix:
    """Gram matrix ``[(psi_l', psi_l)]``.

    The construction is orthonormal, so the identity is returned unless
    ``generic`` asks for the entries to be formed from the coefficient tables.
    """
    N = basis.size
    if basis.orthonormal and not generic:
        return sp.identity(N, format="csc")
    rows, cols, vals = [], [], []
    for i in range(N):
        li, ci = basis.leaf_coefficients(i)
        rows.append(np.full(len(li), i))
        cols.append(li)
        vals.append(ci)
    T = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    G = (T @ T.T).tocsc()
    G.data[np.abs(G.data) < 1e-14] = 0.0
    G.eliminate_zeros()
    return G
