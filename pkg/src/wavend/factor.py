"""Sparse Cholesky and LU without pivoting under a fixed symmetric permutation.

Both factorizations are up-looking: row ``k`` of ``L`` is the solution of a
sparse triangular system whose pattern is the reach of row ``k`` of ``A`` in
the elimination tree.  Factors are kept in CSC form; for LU the rows of ``U``
are stored column-wise as ``U^T`` so both factors are traversed by columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from .ordering import Permutation
from .sparse import as_csc


class IndefiniteMatrixError(np.linalg.LinAlgError):
    def __init__(self, column: int, pivot: float):
        super().__init__(
            f"non-positive pivot {pivot:.3e} in column {column}: the matrix is not positive "
            "definite (compression too aggressive or wrong sign convention)")
        self.column = column


class SingularPivotError(np.linalg.LinAlgError):
    def __init__(self, column: int, pivot: float):
        super().__init__(f"tiny pivot {pivot:.3e} in column {column}")
        self.column = column


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _etree(n, Ap, Ai):
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(Ap[k], Ap[k + 1]):
            i = Ai[p]
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt
    return parent


@numba.njit(cache=True)
def _ereach(k, Ap, Ai, parent, flag, stack):
    """Nonzero columns of row ``k`` of L (topological order in ``stack[top:n]``)."""
    n = len(parent)
    top = n
    flag[k] = k
    for p in range(Ap[k], Ap[k + 1]):
        i = Ai[p]
        if i > k:
            continue
        length = 0
        while flag[i] != k:
            stack[length] = i
            length += 1
            flag[i] = k
            i = parent[i]
        while length > 0:
            top -= 1
            length -= 1
            stack[top] = stack[length]
    return top


@numba.njit(cache=True)
def _colcounts(n, Ap, Ai, parent):
    count = np.ones(n, dtype=np.int64)
    flag = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for k in range(n):
        top = _ereach(k, Ap, Ai, parent, flag, stack)
        for t in range(top, n):
            count[stack[t]] += 1
    return count


@numba.njit(cache=True)
def _pattern(n, Ap, Ai, parent, Lp):
    Li = np.empty(Lp[n], dtype=np.int64)
    nxt = Lp[:-1].copy()
    flag = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for k in range(n):
        Li[nxt[k]] = k
        nxt[k] += 1
        top = _ereach(k, Ap, Ai, parent, flag, stack)
        for t in range(top, n):
            j = stack[t]
            Li[nxt[j]] = k
            nxt[j] += 1
    return Li


@numba.njit(cache=True)
def _cholesky(n, Ap, Ai, Ax, parent, Lp):
    Li = np.empty(Lp[n], dtype=np.int64)
    Lx = np.empty(Lp[n])
    nxt = Lp[:-1].copy()
    flag = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    x = np.zeros(n)
    for k in range(n):
        top = _ereach(k, Ap, Ai, parent, flag, stack)
        x[k] = 0.0
        for p in range(Ap[k], Ap[k + 1]):
            if Ai[p] <= k:
                x[Ai[p]] = Ax[p]
        d = x[k]
        x[k] = 0.0
        for t in range(top, n):
            j = stack[t]
            lkj = x[j] / Lx[Lp[j]]
            x[j] = 0.0
            for p in range(Lp[j] + 1, nxt[j]):
                x[Li[p]] -= Lx[p] * lkj
            d -= lkj * lkj
            Li[nxt[j]] = k
            Lx[nxt[j]] = lkj
            nxt[j] += 1
        if not d > 0.0:
            return Li, Lx, k, d
        Li[nxt[k]] = k
        Lx[nxt[k]] = np.sqrt(d)
        nxt[k] += 1
    return Li, Lx, -1, 0.0


@numba.njit(cache=True)
def _lu(n, Ap, Ai, Ax, Tp, Ti, Tx, parent, Lp, tiny):
    """``Ap/Ai/Ax`` holds A by columns, ``Tp/Ti/Tx`` holds A by rows."""
    Li = np.empty(Lp[n], dtype=np.int64)
    Lx = np.empty(Lp[n])
    Ux = np.empty(Lp[n])                   # U^T shares the pattern of L
    nxt = Lp[:-1].copy()
    flag = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    y = np.zeros(n)
    z = np.zeros(n)
    for k in range(n):
        top = _ereach(k, Ap, Ai, parent, flag, stack)
        for p in range(Tp[k], Tp[k + 1]):
            if Ti[p] < k:
                y[Ti[p]] = Tx[p]
        ukk = 0.0
        for p in range(Ap[k], Ap[k + 1]):
            if Ai[p] < k:
                z[Ai[p]] = Ax[p]
            elif Ai[p] == k:
                ukk = Ax[p]
        for t in range(top, n):
            j = stack[t]
            lkj = y[j] / Ux[Lp[j]]
            ujk = z[j]
            y[j] = 0.0
            z[j] = 0.0
            for p in range(Lp[j] + 1, nxt[j]):
                i = Li[p]
                y[i] -= Ux[p] * lkj
                z[i] -= Lx[p] * ujk
            ukk -= lkj * ujk
            Li[nxt[j]] = k
            Lx[nxt[j]] = lkj
            Ux[nxt[j]] = ujk
            nxt[j] += 1
        if not abs(ukk) >= tiny:
            return Li, Lx, Ux, k, ukk
        Li[nxt[k]] = k
        Lx[nxt[k]] = 1.0
        Ux[nxt[k]] = ukk
        nxt[k] += 1
    return Li, Lx, Ux, -1, 0.0


@numba.njit(cache=True)
def _lsolve(Lp, Li, Lx, x, unit):
    n = len(Lp) - 1
    for j in range(n):
        if not unit:
            x[j] /= Lx[Lp[j]]
        xj = x[j]
        for p in range(Lp[j] + 1, Lp[j + 1]):
            x[Li[p]] -= Lx[p] * xj


@numba.njit(cache=True)
def _ltsolve(Lp, Li, Lx, x):
    """Solve ``L^T x = b`` with L stored by columns (diagonal first)."""
    n = len(Lp) - 1
    for j in range(n - 1, -1, -1):
        s = x[j]
        for p in range(Lp[j] + 1, Lp[j + 1]):
            s -= Lx[p] * x[Li[p]]
        x[j] = s / Lx[Lp[j]]


# ---------------------------------------------------------------------------
# public API


@dataclass
class SymbolicFactor:
    perm: Permutation
    parent: np.ndarray
    colcount: np.ndarray
    Lp: np.ndarray
    _C: sp.csc_matrix                 # permuted pattern/matrix the analysis ran on
    _rows: np.ndarray | None = None

    @property
    def N(self) -> int:
        return len(self.parent)

    @property
    def nnz(self) -> int:
        return int(self.Lp[-1])

    @property
    def anz(self) -> float:
        return self.nnz / self.N

    @property
    def row_indices(self) -> np.ndarray:
        """Row patterns of all columns of L (CSC ``indices``), computed on first use."""
        if self._rows is None:
            C = self._C
            self._rows = _pattern(self.N, C.indptr.astype(np.int64), C.indices.astype(np.int64),
                                  self.parent, self.Lp)
        return self._rows

    def pattern(self) -> sp.csc_matrix:
        data = np.ones(self.nnz)
        return sp.csc_matrix((data, self.row_indices, self.Lp), shape=(self.N, self.N))


def _structure(A) -> sp.csc_matrix:
    if hasattr(A, "to_csc"):
        A = A.to_csc()
    A = sp.csc_matrix(A)
    if (A.shape[0] != A.shape[1]):
        raise ValueError("matrix must be square")
    return A


def symbolic_cholesky(pattern, perm: Permutation | None = None) -> SymbolicFactor:
    """Elimination tree and exact factor column counts of ``P A P^T``.

    Only counts are computed here; the row patterns follow lazily, so the fill
    of orderings with dense factors can be measured without storing them.
    """
    A = _structure(pattern)
    N = A.shape[0]
    perm = Permutation.identity(N) if perm is None else perm
    S = (A != 0).astype(float)
    S = (S + S.T).tocsc()
    C = as_csc(perm.apply(S))
    Ap, Ai = C.indptr.astype(np.int64), C.indices.astype(np.int64)
    parent = _etree(N, Ap, Ai)
    count = _colcounts(N, Ap, Ai, parent)
    Lp = np.concatenate([[0], np.cumsum(count)]).astype(np.int64)
    return SymbolicFactor(perm, parent, count, Lp, C)


@dataclass
class FactorBundle:
    kind: str
    perm: Permutation
    L: sp.csc_matrix
    U: sp.csc_matrix | None
    symbolic: SymbolicFactor

    @property
    def N(self) -> int:
        return self.L.shape[0]

    @property
    def nnz_L(self) -> int:
        return self.L.nnz

    @property
    def anz_L(self) -> float:
        return self.L.nnz / self.N


def _permuted_values(A, sym: SymbolicFactor) -> sp.csc_matrix:
    A = as_csc(_structure(A))
    if A.shape[0] != sym.N:
        raise ValueError("matrix and symbolic factor differ in size")
    C = sym.perm.apply(A).tocoo()
    P = sym._C.tocoo()
    # values on the symmetrized analysis pattern; explicit zeros are kept
    rows = np.concatenate([C.row, P.row])
    cols = np.concatenate([C.col, P.col])
    data = np.concatenate([C.data, np.zeros(P.nnz)])
    C = sp.csc_matrix((data, (rows, cols)), shape=A.shape)
    C.sort_indices()
    return C


def numeric_cholesky(A, sym: SymbolicFactor) -> FactorBundle:
    """``P A P^T = L L^T``; raises :class:`IndefiniteMatrixError` on a bad pivot."""
    C = _permuted_values(A, sym)
    N = sym.N
    Li, Lx, bad, d = _cholesky(N, C.indptr.astype(np.int64), C.indices.astype(np.int64),
                               C.data.astype(float), sym.parent, sym.Lp)
    if bad >= 0:
        raise IndefiniteMatrixError(int(sym.perm.order[bad]), d)
    L = sp.csc_matrix((Lx, Li, sym.Lp), shape=(N, N))
    L.has_sorted_indices = True
    return FactorBundle("cholesky", sym.perm, L, None, sym)


def numeric_lu(A, sym: SymbolicFactor, rel_tiny: float = 1e-13) -> FactorBundle:
    """``P A P^T = L U`` with unit lower ``L``, diagonal pivots taken in order."""
    C = _permuted_values(A, sym)
    T = C.T.tocsc()
    T.sort_indices()
    N = sym.N
    amax = np.abs(C.data).max() if C.nnz else 0.0
    Li, Lx, Ux, bad, piv = _lu(N, C.indptr.astype(np.int64), C.indices.astype(np.int64),
                               C.data.astype(float), T.indptr.astype(np.int64),
                               T.indices.astype(np.int64), T.data.astype(float),
                               sym.parent, sym.Lp, rel_tiny * amax)
    if bad >= 0:
        raise SingularPivotError(int(sym.perm.order[bad]), piv)
    L = sp.csc_matrix((Lx, Li, sym.Lp), shape=(N, N))
    Ut = sp.csc_matrix((Ux, Li.copy(), sym.Lp), shape=(N, N))
    return FactorBundle("lu", sym.perm, L, Ut.T.tocsc(), sym)


def cholesky(A, perm: Permutation | None = None) -> FactorBundle:
    return numeric_cholesky(A, symbolic_cholesky(A, perm))


def solve(bundle: FactorBundle, b) -> np.ndarray:
    """Solve ``A x = b`` for a vector or the columns of a matrix."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != bundle.N:
        raise ValueError(f"right-hand side has length {b.shape[0]}, expected {bundle.N}")
    single = b.ndim == 1
    B = b[:, None] if single else b
    order = bundle.perm.order
    out = np.empty_like(B)
    L = bundle.L
    Lp, Li, Lx = L.indptr.astype(np.int64), L.indices.astype(np.int64), L.data
    if bundle.kind == "lu":
        Ut = bundle.U.T.tocsc()
        Ut.sort_indices()
        Up, Ui, Ux = Ut.indptr.astype(np.int64), Ut.indices.astype(np.int64), Ut.data
    for c in range(B.shape[1]):
        x = np.ascontiguousarray(B[order, c])
        if bundle.kind == "cholesky":
            _lsolve(Lp, Li, Lx, x, False)
            _ltsolve(Lp, Li, Lx, x)
        else:
            _lsolve(Lp, Li, Lx, x, True)
            # U x = y with U^T stored by columns: backward substitution by rows of U
            _ltsolve(Up, Ui, Ux, x)
        out[order, c] = x
    return out[:, 0] if single else out
