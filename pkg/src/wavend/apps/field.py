"""Gaussian random fields sampled through a Cholesky factor of the covariance.

With ``C^G = [(Cov psi_l', psi_l)]`` factored as ``P C^G P^T = L L^T`` the
coefficient vector

    a = G^{-1} (abar^G + P^T L x),   x ~ N(0, I),

has mean ``G^{-1} abar^G`` and covariance ``G^{-1} C^G G^{-1}``.  Any other
square root of ``C^G`` (e.g. from the eigendecomposition) differs from
``P^T L`` by an isometry and gives the same distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..compress import CompressionParams, assemble_compressed
from ..factor import FactorBundle, IndefiniteMatrixError, cholesky, solve
from ..kernels import KernelSpec
from ..ordering import nested_dissection, sparsity_graph
from ..wavelet import WaveletBasis, forward_transform, inverse_transform, mass_matrix
from .rng import normal_block


class FieldError(RuntimeError):
    pass


@dataclass
class FieldModel:
    basis: WaveletBasis
    C: sp.csc_matrix
    mean: np.ndarray                    # abar^G, the tested mean coefficients
    chol_C: FactorBundle
    chol_G: FactorBundle
    seed: int = 0

    @property
    def N(self) -> int:
        return self.basis.size

    def covariance(self) -> np.ndarray:
        """``G^{-1} C^G G^{-1}`` (dense)."""
        X = solve(self.chol_G, self.C.toarray())
        return solve(self.chol_G, X.T).T

    def mean_coefficients(self) -> np.ndarray:
        return solve(self.chol_G, self.mean)


def _ordered_cholesky(M, basis, leaf_size):
    graph = sparsity_graph(M, coords=basis.support_centers(), levels=basis.level)
    perm, _ = nested_dissection(graph, leaf_size)
    return cholesky(M, perm)


def build_field_model(basis: WaveletBasis, kernel: KernelSpec, params: CompressionParams,
                      mean=None, seed: int = 0, leaf_size: int = 32) -> FieldModel:
    """Compressed covariance, mean coefficients and both factorizations.

    ``mean`` is a callable of leaf centres or ``None`` for a centred field.
    """
    C, _ = assemble_compressed(kernel, basis, params)
    if mean is None:
        abar = np.zeros(basis.size)
    else:
        abar = forward_transform(basis, mean(basis.tree.leaf_centers()))
    try:
        chol_C = _ordered_cholesky(C, basis, leaf_size)
    except IndefiniteMatrixError as err:
        raise FieldError(
            f"covariance matrix is not numerically positive definite ({err}); smooth kernels "
            "such as the Gaussian give semidefinite matrices, which this sampler does not handle"
        ) from err
    G = mass_matrix(basis)
    chol_G = _ordered_cholesky(G, basis, leaf_size)
    return FieldModel(basis, C, abar, chol_C, chol_G, seed)


def sample_field(model: FieldModel, count: int, start: int = 0, leaf_values: bool = False):
    """Samples ``start .. start+count-1`` as the columns of an (N, count) array."""
    if count < 0:
        raise ValueError("count must be non-negative")
    X = normal_block(model.seed, start, count, model.N)
    LX = model.chol_C.L @ X
    Y = np.empty_like(LX)
    Y[model.chol_C.perm.order] = LX
    A = solve(model.chol_G, model.mean[:, None] + Y)
    if leaf_values:
        return inverse_transform(model.basis, A)
    return A


def kl_reference(C, m: int):
    """Top ``m`` eigenpairs of a dense symmetric matrix, descending."""
    C = np.asarray(C.toarray() if sp.issparse(C) else C, dtype=float)
    N = C.shape[0]
    if m > N:
        raise ValueError(f"requested {m} modes of a {N}x{N} matrix")
    if N > 1024:
        raise ValueError("eigendecomposition oracle is limited to N <= 1024")
    mu, V = np.linalg.eigh(C)
    idx = np.argsort(mu, kind="stable")[::-1][:m]
    return mu[idx], V[:, idx]


def kl_sample(C, mean, count: int, seed: int, start: int = 0) -> np.ndarray:
    """Samples from the truncated eigen-expansion of ``C`` (all modes), separate stream."""
    N = len(mean)
    mu, V = kl_reference(C, N)
    R = V * np.sqrt(np.clip(mu, 0.0, None))
    X = normal_block(seed, start, count, N, tag=1)
    return np.asarray(mean)[:, None] + R @ X


def empirical_covariance(samples) -> np.ndarray:
    """Unbiased covariance of sample columns (shape (N, count))."""
    S = np.asarray(samples, dtype=float)
    if S.ndim != 2 or S.shape[1] < 2:
        raise ValueError("at least two samples are required")
    D = S - S.mean(axis=1, keepdims=True)
    return D @ D.T / (S.shape[1] - 1)
