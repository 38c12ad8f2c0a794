"""Interaction integrals of kernels between equal leaf cells.

For cells ``A = h (k + [0, 1]^n)`` and ``B = h (k' + [0, 1]^n)`` with offset
``p = k - k'`` a radial kernel gives

    int_A int_B k(x - y) dy dx = h**(2n) int_[-1,1]^n k(h |z + p|) prod(1 - |z_i|) dz,

so one table over offsets serves the whole leaf matrix.  The reduced integral
is split into the ``2**n`` orthants where the tent weight is polynomial.  An
orthant that contains the singular point ``z = -p`` in a corner is mapped to
polar-like (Duffy) coordinates around that corner and integrated with
Gauss-Jacobi in the radial direction; all others use tensor Gauss-Legendre
whose order grows as the singularity gets closer.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .kernels import KernelSpec

_TOL = 1e-14


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def _legendre01(q):
    x, w = roots_legendre(q)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _jacobi01(q, gamma):
    """Nodes/weights for ``int_0^1 u**gamma f(u) du``."""
    if gamma <= -1:
        raise QuadratureError(f"non-integrable radial exponent {gamma}")
    x, w = roots_jacobi(q, 0.0, gamma)
    return 0.5 * (x + 1.0), w * 0.5 ** (gamma + 1.0)


def regular_order(dist: np.ndarray, tol: float = _TOL, qmax: int = 30) -> np.ndarray:
    """Gauss-Legendre order for a unit box at distance ``dist`` from a singularity."""
    x0 = 1.0 + 2.0 * np.asarray(dist, dtype=float)
    rho = x0 + np.sqrt(x0 * x0 - 1.0)
    q = np.ceil(np.log(1.0 / tol) / (2.0 * np.log(rho))) + 2
    return np.clip(q, 3, qmax).astype(int)


def interval_closed_form(s: float, a0, a1, b0, b1):
    """``int_a0^a1 int_b0^b1 |x - y|**-(1 + 2s) dy dx`` for non-overlapping intervals."""
    e = 1.0 - 2.0 * s

    def G(t):
        return np.abs(t) ** e / (-2.0 * s * e)

    return G(b1 - a0) + G(b0 - a1) - G(b1 - a1) - G(b0 - a0)


def _orthant_boxes(n):
    for sig in product((-1, 1), repeat=n):
        lo = np.array([0.0 if s > 0 else -1.0 for s in sig])
        yield np.array(sig, dtype=float), lo


def _regular_integral(kernel, h, offsets, sig, lo, q):
    """Tensor Gauss on one orthant for many offsets at once."""
    n = offsets.shape[1]
    x, w = _legendre01(q)
    nodes = np.stack(np.meshgrid(*([x] * n), indexing="ij"), -1).reshape(-1, n) + lo
    wts = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), -1).reshape(-1, n), axis=1)
    wts = wts * np.prod(1.0 - sig * nodes, axis=1)
    out = np.empty(len(offsets))
    chunk = max(1, 2_000_000 // len(nodes))
    for s0 in range(0, len(offsets), chunk):
        z = nodes[None, :, :] + offsets[s0:s0 + chunk, None, :]
        r = h * np.sqrt(np.sum(z * z, axis=-1))
        out[s0:s0 + chunk] = kernel.profile(r) @ wts
    return out


def _singular_integral(kernel, h, p, sig, lo, qr=14, qa=24):
    """Orthant whose corner carries the singular point ``-p``."""
    n = len(p)
    apex = -p.astype(float)
    hi = lo + 1.0
    eps = np.where(np.isclose(apex, lo), 1.0, -1.0)      # direction into the box
    vanish = np.isclose(1.0 - sig * apex, 0.0)            # weight factors zero at apex
    m = int(vanish.sum())
    beta = kernel.singularity
    gamma = n - 1 - beta + m
    u, wu = _jacobi01(qr, gamma)
    if n == 1:
        dirs = np.array([[1.0]])
        wdir = np.array([1.0])
    else:
        v, wv = _legendre01(qa)
        # the unit square as two triangles t = u (1, v) and t = u (v, 1)
        dirs = np.concatenate([np.stack([np.ones_like(v), v], 1), np.stack([v, np.ones_like(v)], 1)])
        wdir = np.concatenate([wv, wv])
    total = 0.0
    for d, wd in zip(dirs, wdir):
        rho = np.sqrt(np.sum(d * d))
        t = u[:, None] * d[None, :]                     # local coordinates
        z = apex + eps * t
        weight = np.prod(1.0 - sig * z, axis=1) / u ** m
        r = h * u * rho
        g = kernel.regular_part(r) * (h * rho) ** -beta
        total += wd * np.sum(wu * g * weight)
    assert np.all(z >= lo - 1e-12) and np.all(z <= hi + 1e-12)
    return total


def offset_table(kernel: KernelSpec, h: float, extent: int) -> np.ndarray:
    """``W[p] = int_A int_(A + p h) k`` for all offsets ``0 <= p_i < extent``.

    Entries whose integral diverges (``p = 0`` for kernels with
    ``singularity >= n``) are set to ``nan``.
    """
    n = kernel.dim
    if kernel.difference_form and n == 1:
        p = np.arange(extent, dtype=float)
        s = kernel.params["s"]
        W = 2.0 * h ** (1.0 - 2.0 * s) * interval_closed_form(s, 0.0, 1.0, p, p + 1.0)
        W[0] = np.nan
        return W
    grids = np.stack(np.meshgrid(*([np.arange(extent)] * n), indexing="ij"), -1).reshape(-1, n)
    result = np.zeros(len(grids))
    for sig, lo in _orthant_boxes(n):
        hi = lo + 1.0
        corner_hit = np.all(((grids == 0)) | ((grids == 1) & (sig < 0)), axis=1)
        # distance from the singular point -p to the orthant box
        sp_ = -grids.astype(float)
        gap = np.maximum(0.0, np.maximum(lo - sp_, sp_ - hi))
        dist = np.sqrt(np.sum(gap * gap, axis=1))
        reg = ~corner_hit
        orders = regular_order(dist[reg])
        reg_idx = np.flatnonzero(reg)
        for q in np.unique(orders):
            sel = reg_idx[orders == q]
            result[sel] += _regular_integral(kernel, h, grids[sel].astype(float), sig, lo, int(q))
        for i in np.flatnonzero(corner_hit):
            p = grids[i]
            if kernel.singularity >= n and np.all(p == 0):
                result[i] = np.nan
                continue
            result[i] += _singular_integral(kernel, h, p, sig, lo)
    return (h ** (2 * n) * result).reshape((extent,) * n)
