import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import path_lemma_pattern
from wavend.compress import CompressionParams, compression_pattern
from wavend.kernels import fractional_laplacian_kernel
from wavend.meshgeom import DomainSpec, build_dyadic_hierarchy
from wavend.ordering import (Permutation, check_separators, fill_in_oracle, minimum_degree,
                             nested_dissection, sparsity_graph)
from wavend.wavelet import build_basis


def path_matrix(n):
    return sp.diags([1.0, 2.0, 1.0], [-1, 0, 1], shape=(n, n), format="csc")


def grid_graph(n):
    G = sp.diags([1, 1], [1, -1], shape=(n, n))
    I = sp.identity(n)
    A = sp.kron(G, I) + sp.kron(I, G) + sp.identity(n * n)
    xy = np.stack(np.meshgrid(np.arange(n), np.arange(n), indexing="ij"), -1).reshape(-1, 2)
    return sparsity_graph(A, coords=xy)


def random_symmetric(rng, N, density):
    M = sp.random(N, N, density=density, random_state=rng)
    return ((M + M.T) != 0).astype(float) + sp.identity(N)


def test_graph_examples():
    g = sparsity_graph(sp.identity(6))
    assert g.n_edges == 0
    g = sparsity_graph(path_matrix(5))
    assert g.n_edges == 4
    assert g.neighbors(2).tolist() == [1, 3]
    assert not g.symmetrized


def test_unsymmetric_pattern_symmetrized():
    M = sp.csc_matrix(np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]]))
    g = sparsity_graph(M)
    assert g.symmetrized and g.n_edges == 1
    assert g.neighbors(1).tolist() == [0]


def test_edge_count_of_compressed_pattern():
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 8), 1)
    pat = compression_pattern(b, CompressionParams.for_basis(b, fractional_laplacian_kernel(0.375, 1)))
    g = sparsity_graph(pat)
    assert g.n_edges == (pat.nnz - b.size) // 2


def test_path_graph_root_separator():
    g = sparsity_graph(path_matrix(7), coords=np.arange(7.0))
    perm, tree = nested_dissection(g, leaf_size=1)
    assert perm.order[-1] == 3
    assert tree.roots[0].separator.tolist() == [3]
    assert check_separators(g, tree)


def test_edgeless_identity():
    perm, _ = nested_dissection(sparsity_graph(sp.identity(9)), leaf_size=2)
    assert perm.order.tolist() == list(range(9))


def test_grid_separator_sizes():
    g = grid_graph(16)
    perm, tree = nested_dissection(g, leaf_size=4)
    assert check_separators(g, tree)

    def walk(node, depth, out):
        if node.separator.size:
            out.setdefault(depth, []).append(len(node.separator))
        for c in (node.left, node.right):
            if c is not None:
                walk(c, depth + 1, out)

    sizes = {}
    walk(tree.roots[0], 0, sizes)
    assert max(sizes[0]) <= 16
    assert max(sizes[1]) <= 8
    assert max(sizes[2]) <= 8
    assert max(sizes[3]) <= 4


def test_components_ordered_independently():
    A = sp.block_diag([path_matrix(5), path_matrix(4)]).tocsc()
    g = sparsity_graph(A, coords=np.concatenate([np.arange(5.0), np.arange(4.0)]))
    perm, tree = nested_dissection(g, leaf_size=1)
    assert len(tree.roots) == 2
    assert set(perm.order[:5]) == set(range(5))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 150), st.floats(0.005, 0.1), st.integers(1, 40), st.integers(0, 2 ** 32 - 1))
def test_dissection_invariants(N, density, leaf, seed):
    rng = np.random.default_rng(seed)
    A = random_symmetric(rng, N, density)
    g = sparsity_graph(A, coords=rng.normal(size=(N, 2)), levels=rng.integers(0, 4, size=N))
    perm, tree = nested_dissection(g, leaf)
    assert np.array_equal(perm.order[perm.forward], np.arange(N))
    assert np.array_equal(perm.forward[perm.order], np.arange(N))
    assert check_separators(g, tree)
    P = perm.apply(A)
    for node in tree.nodes():
        if node.left is None and node.right is None:
            assert len(node.vertices) <= leaf
            continue
        n1 = 0 if node.left is None else len(node.left.vertices)
        n2 = 0 if node.right is None else len(node.right.vertices)
        assert max(n1, n2) <= 0.75 * len(node.vertices)
        assert n1 + n2 + len(node.separator) == len(node.vertices)
        # V1, V2 and S occupy consecutive positions and the (V1, V2) block is empty
        start = perm.forward[node.vertices].min()
        blk = P[start:start + n1, start + n1:start + n1 + n2]
        assert blk.nnz == 0


def test_permutation_validation():
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])
    p = Permutation([2, 0, 1])
    assert p.forward.tolist() == [1, 2, 0]
    assert p.inverse.tolist() == [2, 0, 1]


def test_minimum_degree_star():
    # center 0 with 4 leaves: leaves have degree 1 and go first
    A = sp.lil_matrix((5, 5))
    for i in range(1, 5):
        A[0, i] = A[i, 0] = 1
    adj = sparsity_graph(A).adjacency()
    order = minimum_degree(adj, np.arange(5))
    assert order[-1] == 0 or order[-2] == 0


def test_fill_oracle_examples():
    g = sparsity_graph(path_matrix(6))
    L = fill_in_oracle(g, Permutation.identity(6))
    assert L.nnz == 6 + 5
    A = sp.lil_matrix((5, 5))
    for i in range(1, 5):
        A[0, i] = A[i, 0] = 1
    g = sparsity_graph(A)
    L = fill_in_oracle(g, Permutation.identity(5))
    fill = L.nnz - 5 - 4
    assert fill == 6


def test_fill_oracle_refuses_large():
    with pytest.raises(ValueError):
        fill_in_oracle(sparsity_graph(sp.identity(600)), Permutation.identity(600))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 60), st.floats(0.01, 0.2), st.integers(0, 2 ** 32 - 1))
def test_fill_oracle_matches_exhaustive_paths(N, density, seed):
    rng = np.random.default_rng(seed)
    A = random_symmetric(rng, N, density)
    g = sparsity_graph(A)
    perm = Permutation(rng.permutation(N))
    L = fill_in_oracle(g, perm).tocoo()
    adj = [set(g.neighbors(v).tolist()) for v in range(N)]
    assert set(zip(L.row.tolist(), L.col.tolist())) == path_lemma_pattern(adj, perm.order.tolist())
