"""Sparse-matrix helpers: the ``anz`` metric and Matrix Market coordinate I/O."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

HEADER_GENERAL = "%%MatrixMarket matrix coordinate real general"
HEADER_SYMMETRIC = "%%MatrixMarket matrix coordinate real symmetric"


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def as_csc(A) -> sp.csc_matrix:
    """Canonical CSC: sorted row indices, duplicates summed, no explicit zeros."""
    A = sp.csc_matrix(A, dtype=float)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def anz(A) -> float:
    """Average number of nonzeros per row."""
    N = A.shape[0]
    if N == 0:
        raise ValueError("empty matrix")
    nnz = A.nnz if hasattr(A, "nnz") else np.count_nonzero(A)
    return nnz / N


def write_matrix_market(path, A, symmetric: bool = False) -> None:
    """Write ``A`` in coordinate format; with ``symmetric`` only the lower triangle is stored."""
    A = as_csc(A)
    if symmetric:
        A = sp.tril(A, format="csc")
        A.sort_indices()
    coo = A.tocoo()
    # column-major order is what the CSC arrays already hold
    lines = [HEADER_SYMMETRIC if symmetric else HEADER_GENERAL,
             f"{A.shape[0]} {A.shape[1]} {A.nnz}"]
    lines += [f"{i + 1} {j + 1} {v:.17g}" for i, j, v in zip(coo.row, coo.col, coo.data)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_market(path) -> sp.csc_matrix:
    with open(path, encoding="utf-8") as fh:
        text = fh.read().splitlines()
    if not text:
        raise MatrixMarketError(1, "empty file")
    head = text[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1:4] != ["matrix", "coordinate", "real"] \
            or head[4] not in ("general", "symmetric"):
        raise MatrixMarketError(1, f"unsupported header {text[0]!r}")
    symmetric = head[4] == "symmetric"
    ln = 1
    while ln < len(text) and (text[ln].startswith("%") or not text[ln].strip()):
        ln += 1
    if ln == len(text):
        raise MatrixMarketError(ln, "missing size line")
    try:
        m, n, nnz = (int(t) for t in text[ln].split())
    except ValueError:
        raise MatrixMarketError(ln + 1, f"bad size line {text[ln]!r}") from None
    if m < 0 or n < 0 or nnz < 0:
        raise MatrixMarketError(ln + 1, "negative size")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for i in range(ln + 1, len(text)):
        line = text[i]
        if not line.strip() or line.startswith("%"):
            continue
        if k == nnz:
            raise MatrixMarketError(i + 1, "more entries than declared")
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(i + 1, f"bad entry {line!r}") from None
        if not (1 <= r <= m and 1 <= c <= n):
            raise MatrixMarketError(i + 1, f"index ({r}, {c}) out of range")
        if symmetric and r < c:
            raise MatrixMarketError(i + 1, "symmetric file with an upper-triangle entry")
        rows[k], cols[k], vals[k] = r - 1, c - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(len(text), f"expected {nnz} entries, found {k}")
    if symmetric:
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return as_csc(sp.coo_matrix((vals, (rows, cols)), shape=(m, n)))


def write_permutation(path, order) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(str(int(v)) for v in order) + "\n")


def read_permutation(path) -> np.ndarray:
    vals = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            for tok in line.split():
                try:
                    vals.append(int(tok))
                except ValueError:
                    raise MatrixMarketError(i, f"bad permutation entry {tok!r}") from None
    order = np.array(vals, dtype=np.int64)
    if not np.array_equal(np.sort(order), np.arange(len(order))):
        raise ValueError("permutation file is not a bijection on 0..N-1")
    return order
