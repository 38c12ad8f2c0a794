"""Radial kernels and their operator orders."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A radial kernel ``k(x, y) = profile(|x - y|)``.

    ``singularity`` is the exponent ``beta`` with ``k ~ r**-beta`` at the
    diagonal (0 for bounded kernels).  ``difference_form`` marks the
    fractional Laplacian, whose Galerkin form is
    ``int int (u(y) - u(x)) (v(y) - v(x)) k(x, y) dy dx / 2`` rather than
    ``int int k(x, y) u(y) v(x) dy dx``.
    """

    name: str
    dim: int
    profile: Callable[[np.ndarray], np.ndarray]
    order2q: float
    singular_diagonal: bool
    singularity: float = 0.0
    difference_form: bool = False
    constants: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def q(self) -> float:
        return self.order2q / 2

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.dim == 1 and x.ndim == 0:
            r = np.abs(x - y)
        else:
            r = np.sqrt(np.sum((x - y) ** 2, axis=-1))
        return self.profile(r)

    def regular_part(self, r):
        """``k(r) * r**beta``; smooth up to the diagonal."""
        return self.profile(r) * r ** self.singularity


def fractional_laplacian_kernel(s: float, n: int) -> KernelSpec:
    """Kernel ``2 |x - y|**-(n + 2s)`` of the integral fractional Laplacian."""
    if not 0 < s < 0.5:
        raise ValueError(f"s must lie in (0, 1/2), got {s}")
    if n not in (1, 2):
        raise ValueError("only n = 1, 2 are supported")
    beta = n + 2 * s

    def profile(r):
        return 2.0 * np.asarray(r, dtype=float) ** -beta

    return KernelSpec(
        name="fractional_laplacian", dim=n, profile=profile, order2q=2 * s,
        singular_diagonal=True, singularity=beta, difference_form=True,
        constants={(0, 0): 2.0, (1, 0): 2.0 * beta, (0, 1): 2.0 * beta},
        params={"s": s})


def exponential_covariance_kernel(length: float = 1.0, n: int = 2,
                                  order2q: float | None = None) -> KernelSpec:
    """``exp(-|x - y| / length)``.

    The kernel has no genuine order; ``order2q`` defaults to ``-(n + 1)`` for
    the cut-off parameters and can be overridden.
    """
    if not length > 0:
        raise ValueError("correlation length must be positive")

    def profile(r):
        return np.exp(-np.asarray(r, dtype=float) / length)

    return KernelSpec(
        name="exponential", dim=n, profile=profile,
        order2q=-(n + 1.0) if order2q is None else float(order2q),
        singular_diagonal=False, params={"length": length})


def gaussian_covariance_kernel(length: float = 1.0, n: int = 2,
                               order2q: float | None = None) -> KernelSpec:
    """``exp(-|x - y|**2 / (2 length**2))``; numerically semidefinite Galerkin matrices."""
    if not length > 0:
        raise ValueError("correlation length must be positive")

    def profile(r):
        r = np.asarray(r, dtype=float)
        return np.exp(-r * r / (2.0 * length * length))

    return KernelSpec(
        name="gaussian", dim=n, profile=profile,
        order2q=-(n + 1.0) if order2q is None else float(order2q),
        singular_diagonal=False, params={"length": length})


def make_kernel(name: str, n: int, **params) -> KernelSpec:
    if name == "fractional_laplacian":
        return fractional_laplacian_kernel(params["s"], n)
    if name == "exponential":
        return exponential_covariance_kernel(params.get("length", 1.0), n, params.get("order2q"))
    if name == "gaussian":
        return gaussian_covariance_kernel(params.get("length", 1.0), n, params.get("order2q"))
    raise ValueError(f"unknown kernel {name!r}")
