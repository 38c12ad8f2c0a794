"""Drivers: fractional heat equation and Gaussian random-field sampling."""

from .field import (FieldError, FieldModel, build_field_model, empirical_covariance,
                    kl_reference, kl_sample, sample_field)
from .heat import (HeatProblem, ThetaSchemeConfig, dense_theta_scheme, heat_source,
                   load_vector, run_theta_scheme, setup_heat)
from .rng import normal_stream

__all__ = [
    "FieldError", "FieldModel", "build_field_model", "empirical_covariance", "kl_reference",
    "kl_sample", "sample_field", "HeatProblem", "ThetaSchemeConfig", "dense_theta_scheme",
    "heat_source", "load_vector", "run_theta_scheme", "setup_heat", "normal_stream",
]
