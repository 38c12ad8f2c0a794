import os
import tempfile

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from wavend.sparse import (HEADER_GENERAL, HEADER_SYMMETRIC, MatrixMarketError, anz,
                           read_matrix_market, read_permutation, write_matrix_market,
                           write_permutation)


def test_anz_examples():
    assert anz(sp.identity(100, format="csc")) == 1.0
    T = sp.diags([1, 2, 3], [-1, 0, 1], shape=(4, 4))
    assert anz(sp.csc_matrix(T)) == 2.5


def test_headers(tmp_path):
    A = sp.csc_matrix(np.array([[2.0, 1.0], [1.0, 3.0]]))
    write_matrix_market(tmp_path / "g.mtx", A)
    write_matrix_market(tmp_path / "s.mtx", A, symmetric=True)
    g = (tmp_path / "g.mtx").read_text().splitlines()
    s = (tmp_path / "s.mtx").read_text().splitlines()
    assert g[0] == HEADER_GENERAL and g[1] == "2 2 4"
    assert s[0] == HEADER_SYMMETRIC and s[1] == "2 2 3"


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.floats(0.0, 0.5), st.integers(0, 2 ** 32 - 1), st.booleans())
def test_roundtrip_exact(n, density, seed, symmetric):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng, format="csc")
    A.data = rng.normal(size=A.nnz) * 10.0 ** rng.integers(-200, 200, size=A.nnz)
    if symmetric:
        A = (A + A.T).tocsc()
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "a.mtx")
        write_matrix_market(path, A, symmetric=symmetric)
        B = read_matrix_market(path)
    A.eliminate_zeros()
    assert B.shape == A.shape
    assert (A != B).nnz == 0


@pytest.mark.parametrize("text,line", [
    ("%%MatrixMarket matrix array real general\n1 1\n1\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2\n", 2),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 x 1\n", 4),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n", 3),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    with pytest.raises(MatrixMarketError) as exc:
        read_matrix_market(p)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_comments_skipped(tmp_path):
    p = tmp_path / "c.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n% note\n2 2 1\n% mid\n2 1 4.5\n")
    A = read_matrix_market(p)
    assert A[1, 0] == 4.5 and A.nnz == 1


def test_permutation_io(tmp_path):
    write_permutation(tmp_path / "p.txt", [2, 0, 1])
    assert read_permutation(tmp_path / "p.txt").tolist() == [2, 0, 1]
    (tmp_path / "q.txt").write_text("0 0 1\n")
    with pytest.raises(ValueError):
        read_permutation(tmp_path / "q.txt")
