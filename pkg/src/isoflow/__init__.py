"""isoflow: simulation and Monte Carlo verification of one-dimensional
isotropic Brownian stochastic flows with compactly supported correlation."""

from .kernel import (
    CorrelationProfile,
    Kernel,
    build_profile,
    load_profile_csv,
    lyapunov_lprime,
    make_bump_kernel,
    profile_from_table,
    save_profile_csv,
    sigma,
)
from .hull import ConcaveMajorant, concave_majorant, upper_concave_envelope
from .constants import (
    CovarianceDiagnostics,
    FlowConstants,
    check_covariance_conditions,
    moment_constants,
)
from .stats import GrowthFit, MomentEstimate, fit_growth_exponent, ks_two_sample

__version__ = "0.1.0"

__all__ = [
    "CorrelationProfile",
    "Kernel",
    "build_profile",
    "load_profile_csv",
    "lyapunov_lprime",
    "make_bump_kernel",
    "profile_from_table",
    "save_profile_csv",
    "sigma",
    "ConcaveMajorant",
    "concave_majorant",
    "upper_concave_envelope",
    "CovarianceDiagnostics",
    "FlowConstants",
    "check_covariance_conditions",
    "moment_constants",
    "GrowthFit",
    "MomentEstimate",
    "fit_growth_exponent",
    "ks_two_sample",
    "__version__",
]
