import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_pattern, cutoffs
from wavend.compress import (CompressionParams, ConstraintError, assemble_compressed,
                             assemble_dense, assemble_entry, compression_pattern,
                             cutoff_parameters, decay_bound, support_distances, verify_decay)
from wavend.kernels import exponential_covariance_kernel, fractional_laplacian_kernel
from wavend.meshgeom import DomainSpec, build_dyadic_hierarchy
from wavend.wavelet import build_basis, forward_transform


def params_1d(J, a=1.0, delta=1.25):
    return CompressionParams(a=a, d=1, dtilde=1, delta=delta, q=0.375, J=J)


def test_cutoff_example():
    B, Bs = cutoff_parameters(params_1d(5), 5, 5)
    assert B == 0.03125
    assert 2.0 ** ((8.75 - 22.5) / 2.75) <= B


def test_cutoff_coarsest_level():
    p = params_1d(6, a=1.25)
    B, _ = cutoff_parameters(p, 0, 0)
    assert B >= 1.25


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.floats(1.0, 3.0), st.floats(0.05, 0.95))
def test_cutoff_monotone(J, a, frac):
    p = params_1d(J, a=a, delta=1 + frac * 0.75)
    for j in range(J + 1):
        for jp in range(J + 1):
            B, Bs = cutoff_parameters(p, j, jp)
            assert (B, Bs) == pytest.approx(cutoffs(a, 1, 0.375, p.delta, J, j, jp), rel=1e-15)
            if j < J:
                assert cutoff_parameters(p, j + 1, jp)[0] <= B
            if jp < J:
                assert cutoff_parameters(p, j, jp + 1)[0] <= B


@pytest.mark.parametrize("delta", [1.0, 1.75, 2.0, 0.5])
def test_delta_constraint(delta):
    with pytest.raises(ConstraintError):
        params_1d(5, delta=delta)


def test_a_constraint():
    with pytest.raises(ConstraintError):
        params_1d(5, a=0.9)


def test_level_range():
    with pytest.raises(ValueError):
        cutoff_parameters(params_1d(3), 4, 0)


def test_scaling_only_basis_is_dense():
    b = build_basis(build_dyadic_hierarchy(DomainSpec.square(1.0), 1), 2)
    p = CompressionParams(a=1.0, d=1, dtilde=2, delta=1.2, q=0.375, J=1)
    pat = compression_pattern(b, p)
    assert pat.nnz == b.size ** 2


def test_far_finest_pair_dropped():
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 6), 1)
    p = params_1d(6)
    pairs = compression_pattern(b, p).pairs()
    assert (b.size - 32, b.size - 1) not in pairs
    B, _ = cutoff_parameters(p, 6, 6)
    assert support_distances(b, [b.size - 32], [b.size - 1])[0] > B


@pytest.mark.parametrize("dom,J,dtilde,kernel,a,delta", [
    (DomainSpec.interval(1.0), 8, 1, fractional_laplacian_kernel(0.375, 1), 1.0, 1.25),
    (DomainSpec.interval(2.0, -1.0), 7, 2, fractional_laplacian_kernel(0.25, 1), 1.25, None),
    (DomainSpec.square(1.0), 4, 1, fractional_laplacian_kernel(0.375, 2), 1.25, None),
    (DomainSpec.lshape(2.0, holes=[(0.25, 0.25, 0.5, 0.5)]), 4, 2,
     fractional_laplacian_kernel(0.375, 2), 1.1, 1.3),
    (DomainSpec.square(4.0), 4, 5, exponential_covariance_kernel(1.0, 2), 1.25, None),
])
def test_pattern_equals_brute_force(dom, J, dtilde, kernel, a, delta):
    b = build_basis(build_dyadic_hierarchy(dom, J), dtilde)
    p = CompressionParams.for_basis(b, kernel, a=a, delta=delta)
    pat = compression_pattern(b, p)
    keep = brute_force_pattern(b, a, p.delta, kernel.q)
    got = np.zeros_like(keep)
    got[pat.rows, pat.cols] = True
    assert np.array_equal(got, keep)
    assert np.array_equal(keep, keep.T)
    assert keep[np.ix_(b.level == 0, b.level == 0)].all()


def test_pattern_ratio_decreases_with_level():
    kernel = fractional_laplacian_kernel(0.375, 1)
    ratios = []
    for J in (7, 8, 9, 10):
        b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), J), 1)
        pat = compression_pattern(b, CompressionParams.for_basis(b, kernel))
        ratios.append(pat.nnz / b.size ** 2)
    assert ratios[-1] < 0.25
    assert all(x > y for x, y in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("dom,J,dtilde,kernel", [
    (DomainSpec.interval(1.0), 6, 1, fractional_laplacian_kernel(0.375, 1)),
    (DomainSpec.interval(1.0), 6, 3, fractional_laplacian_kernel(0.2, 1)),
    (DomainSpec.square(1.0), 3, 1, fractional_laplacian_kernel(0.375, 2)),
    (DomainSpec.lshape(1.0, holes=[(0.125, 0.125, 0.25, 0.25)]), 4, 2,
     fractional_laplacian_kernel(0.375, 2)),
    (DomainSpec.square(4.0), 4, 5, exponential_covariance_kernel(1.0, 2)),
])
def test_compressed_matches_dense(dom, J, dtilde, kernel):
    b = build_basis(build_dyadic_hierarchy(dom, J), dtilde)
    p = CompressionParams.for_basis(b, kernel)
    A, stats = assemble_compressed(kernel, b, p)
    D = assemble_dense(kernel, b)
    pat = compression_pattern(b, p)
    M = A.toarray()
    assert np.abs(M - D)[pat.rows, pat.cols].max() <= 1e-12 * np.abs(D).max()
    outside = np.ones_like(M, dtype=bool)
    outside[pat.rows, pat.cols] = False
    assert np.all(M[outside] == 0)
    assert np.abs(M - M.T).max() <= 1e-10
    assert stats.nnz == A.nnz and stats.anz == A.nnz / b.size


def test_wide_route_equals_block_route():
    """FFT-applied coarse groups reproduce the blockwise contraction."""
    kernel = fractional_laplacian_kernel(0.375, 2)
    b = build_basis(build_dyadic_hierarchy(DomainSpec.square(1.0), 4), 1)
    p = CompressionParams.for_basis(b, kernel)
    A1, _ = assemble_compressed(kernel, b, p, wide=4)
    A2, _ = assemble_compressed(kernel, b, p, wide=10 ** 9)
    assert abs(A1 - A2).max() <= 1e-12 * abs(A2).max()


def test_entry_symmetry_and_dense_agreement(interval_basis):
    k = fractional_laplacian_kernel(0.375, 1)
    D = assemble_dense(k, interval_basis)
    for i, j in [(0, 0), (3, 40), (63, 17), (10, 11)]:
        e = assemble_entry(k, interval_basis, i, j)
        assert e == pytest.approx(assemble_entry(k, interval_basis, j, i), rel=1e-13, abs=1e-15)
        assert e == pytest.approx(D[i, j], rel=1e-12, abs=1e-14)


def test_smooth_kernel_annihilates_constants():
    """Covariance applied to a constant is smooth, so its wavelet entries nearly vanish."""
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 6), 3)
    D = assemble_dense(exponential_covariance_kernel(1.0, 1), b)
    col = D @ forward_transform(b, np.ones(64))
    assert np.abs(col[b.level == b.level.max()]).max() < 1e-6 * np.abs(col).max()


def test_fractional_constants_in_kernel_null_space(interval_basis):
    k = fractional_laplacian_kernel(0.375, 1)
    D = assemble_dense(k, interval_basis)
    assert np.abs(D[:, 0]).max() < 1e-12 * np.abs(D).max()
    assert np.linalg.eigvalsh(D).min() > -1e-12 * np.abs(D).max()


def test_decay_bound_power_law():
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 4), 1)
    k = fractional_laplacian_kernel(0.375, 1)
    r = decay_bound(b, k, 3, 3, 0.2) / decay_bound(b, k, 3, 3, 0.4)
    assert r == pytest.approx(2 ** 3.75)


def test_decay_dropped_entries_within_fitted_constant():
    k = fractional_laplacian_kernel(0.375, 1)
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 9), 1)
    D = assemble_dense(k, b)
    N = b.size
    R, C = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    R, C = R.ravel(), C.ravel()
    dist = support_distances(b, R, C)
    sep = (dist > 0) & (b.level[R] > 0) & (b.level[C] > 0)
    pairs = np.column_stack([R[sep], C[sep]])
    report = verify_decay(b, k, pairs, dense=D, fit_mask=np.ones(len(pairs), dtype=bool))
    assert report.max_violation <= 1.0
    pat = compression_pattern(b, CompressionParams.for_basis(b, k))
    kept = np.zeros((N, N), dtype=bool)
    kept[pat.rows, pat.cols] = True
    dropped = ~kept[pairs[:, 0], pairs[:, 1]]
    assert dropped.any()
    assert np.all(report.ratio[dropped] <= report.fitted_constant)


def test_decay_ratio_saturates():
    """The level-wise maximal ratio approaches a finite limit (the estimate holds)."""
    k = fractional_laplacian_kernel(0.375, 1)
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 9), 1)
    D = assemble_dense(k, b)
    maxima = []
    for L in range(5, 10):
        rows = np.flatnonzero(b.level == L)
        R, C = np.meshgrid(rows, rows, indexing="ij")
        R, C = R.ravel(), C.ravel()
        sep = support_distances(b, R, C) > 0
        rep = verify_decay(b, k, np.column_stack([R[sep], C[sep]]), dense=D)
        maxima.append(rep.ratio.max())
    growth = np.diff(maxima) / np.array(maxima[:-1])
    assert np.all(growth > 0)
    assert np.all(np.diff(growth) < 0)
    assert growth[-1] < 0.02


def test_decay_requires_separation(interval_basis):
    with pytest.raises(ValueError):
        verify_decay(interval_basis, fractional_laplacian_kernel(0.375, 1), [(5, 5)])


def test_decay_exponent():
    b = build_basis(build_dyadic_hierarchy(DomainSpec.interval(1.0), 4), 1)
    rep = verify_decay(b, fractional_laplacian_kernel(0.375, 1), [(8, 15)])
    assert rep.exponent == 3.75
    assert rep.table().shape == (1, 8)
