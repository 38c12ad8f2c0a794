"""Fast direct solvers for nonlocal operators in wavelet coordinates."""

__version__ = "0.1.0"
