"""Theta-scheme for the fractional heat equation ``u' + (-L_s) u = f``.

With mass matrix ``G`` and stiffness ``S`` (positive semidefinite) each step
solves

    (G + theta dt S) u_{i+1} = (G - (1 - theta) dt S) u_i
                               + dt ((1 - theta) f_i + theta f_{i+1}),

factorizing the left-hand matrix once for the whole run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.special import roots_legendre

from ..compress import CompressionParams, assemble_compressed
from ..factor import FactorBundle, numeric_cholesky, solve, symbolic_cholesky
from ..kernels import fractional_laplacian_kernel
from ..meshgeom import DomainSpec, build_dyadic_hierarchy
from ..ordering import levelwise_ordering, nested_dissection, sparsity_graph
from ..wavelet import WaveletBasis, build_basis, forward_transform, mass_matrix


def heat_source(x, t):
    """Gaussian heat spot circling the origin once per unit time.

    In 2D ``100 exp(-40 (x1 - cos 2 pi t)^2 - 40 (x2 - sin 2 pi t)^2)``; a
    1D point uses the first component only.
    """
    x = np.asarray(x, dtype=float)
    c, s = np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)
    if x.ndim == 0 or x.shape[-1] == 1:
        x1 = x if x.ndim == 0 else x[..., 0]
        return 100.0 * np.exp(-40.0 * (x1 - c) ** 2)
    return 100.0 * np.exp(-40.0 * (x[..., 0] - c) ** 2 - 40.0 * (x[..., 1] - s) ** 2)


def load_vector(basis: WaveletBasis, f: Callable, t: float, order: int = 4) -> np.ndarray:
    """Wavelet coefficients ``(f(., t), psi_lambda)`` from Gauss cell averages."""
    tree = basis.tree
    n = tree.dim
    g, w = roots_legendre(order)
    g, w = 0.5 * (g + 1), 0.5 * w
    pts = np.stack(np.meshgrid(*([g] * n), indexing="ij"), -1).reshape(-1, n)
    wts = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), -1).reshape(-1, n), axis=1)
    h = tree.leaf_width
    lo = np.asarray(tree.domain.origin) + tree.levels[-1].index * h
    x = lo[:, None, :] + h * pts[None, :, :]
    avg = f(x, t) @ wts
    return forward_transform(basis, avg)


@dataclass
class ThetaSchemeConfig:
    theta: float = 0.5
    T: float = 3.0
    steps: int = 150
    source: Callable | None = None        # load(t) -> coefficient vector
    u0: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.steps < 1:
            raise ValueError("at least one time step is required")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.steps


def _loads(cfg, N):
    if cfg.source is None:
        return lambda t: np.zeros(N)
    return cfg.source


def run_theta_scheme(cfg: ThetaSchemeConfig, G, S, factor: FactorBundle | None = None,
                     perm=None):
    """All ``steps + 1`` coefficient vectors and the factorization used.

    ``factor`` must factorize ``G + theta dt S``; it is computed (once) when
    omitted, using ``perm`` or the identity ordering.
    """
    G = sp.csc_matrix(G)
    S = sp.csc_matrix(S)
    N = G.shape[0]
    dt = cfg.dt
    if factor is None:
        A = (G + cfg.theta * dt * S).tocsc()
        factor = numeric_cholesky(A, symbolic_cholesky(A, perm or levelwise_ordering(N)))
    B = (G - (1 - cfg.theta) * dt * S).tocsr()
    load = _loads(cfg, N)
    u = np.zeros(N) if cfg.u0 is None else np.asarray(cfg.u0, dtype=float).copy()
    traj = np.empty((cfg.steps + 1, N))
    traj[0] = u
    f_old = load(0.0)
    for i in range(cfg.steps):
        f_new = load((i + 1) * dt)
        rhs = B @ u + dt * ((1 - cfg.theta) * f_old + cfg.theta * f_new)
        u = solve(factor, rhs)
        traj[i + 1] = u
        f_old = f_new
    return traj, factor


def dense_theta_scheme(cfg: ThetaSchemeConfig, G, S) -> np.ndarray:
    """Reference stepping with dense matrices and a dense LU."""
    G = np.asarray(G.toarray() if sp.issparse(G) else G, dtype=float)
    S = np.asarray(S.toarray() if sp.issparse(S) else S, dtype=float)
    N = G.shape[0]
    dt = cfg.dt
    lu = sla.lu_factor(G + cfg.theta * dt * S)
    B = G - (1 - cfg.theta) * dt * S
    load = _loads(cfg, N)
    u = np.zeros(N) if cfg.u0 is None else np.asarray(cfg.u0, dtype=float).copy()
    traj = np.empty((cfg.steps + 1, N))
    traj[0] = u
    for i in range(cfg.steps):
        rhs = B @ u + dt * ((1 - cfg.theta) * load(i * dt) + cfg.theta * load((i + 1) * dt))
        u = sla.lu_solve(lu, rhs)
        traj[i + 1] = u
    return traj


@dataclass
class HeatProblem:
    basis: WaveletBasis
    G: sp.csc_matrix
    S: sp.csc_matrix
    A: sp.csc_matrix
    factor: FactorBundle
    cfg: ThetaSchemeConfig
    params: CompressionParams
    timings: dict = field(default_factory=dict)


def setup_heat(level: int, s: float = 0.375, domain: DomainSpec | None = None, dtilde: int = 1,
               a: float = 1.25, delta: float | None = None, theta: float = 0.5, T: float = 3.0,
               steps: int = 150, leaf_size: int = 32, ordering: str = "nested_dissection",
               source: Callable = heat_source) -> HeatProblem:
    """Assemble, order and factorize the theta-scheme matrix ``G + theta dt S``.

    The default domain is the square of side 2.5 centred at the origin, which
    keeps the unit-circle path of the heat spot inside.
    """
    import time

    tm = {}
    if domain is None:
        domain = DomainSpec.square(2.5, (-1.25, -1.25))
    t0 = time.perf_counter()
    tree = build_dyadic_hierarchy(domain, level)
    basis = build_basis(tree, dtilde)
    kernel = fractional_laplacian_kernel(s, tree.dim)
    params = CompressionParams.for_basis(basis, kernel, a=a, delta=delta)
    S, _ = assemble_compressed(kernel, basis, params)
    G = mass_matrix(basis)
    tm["t_wem"] = time.perf_counter() - t0
    cfg = ThetaSchemeConfig(theta, T, steps,
                            source=lambda t: load_vector(basis, source, t))
    A = (G + theta * cfg.dt * S).tocsc()
    A.eliminate_zeros()
    t0 = time.perf_counter()
    if ordering == "nested_dissection":
        graph = sparsity_graph(A, coords=basis.support_centers(), levels=basis.level)
        perm, _ = nested_dissection(graph, leaf_size)
    elif ordering == "levelwise":
        perm = levelwise_ordering(basis.size)
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    tm["t_nd"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    factor = numeric_cholesky(A, symbolic_cholesky(A, perm))
    tm["t_chol"] = time.perf_counter() - t0
    return HeatProblem(basis, G, S, A, factor, cfg, params, tm)
