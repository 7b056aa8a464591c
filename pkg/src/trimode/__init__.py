"""Exact Gaussian dynamics of three coupled oscillators and correlation measures
between the two terminal modes."""

from .dynamics import (
    Model,
    SqueezeSpec,
    Trajectory,
    evolve_trajectory,
    initial_covariance,
)
from .errors import (
    ConditioningWarning,
    NotApplicableError,
    NumericalError,
    ParameterError,
    TrimodeError,
    UnphysicalStateError,
)
from .measures import (
    MeasuredMode,
    MeasureSeries,
    dynamical_fidelity_susceptibility,
    gaussian_discord,
    gaussian_fidelity,
    hmr_pt_eigenvalues,
    log_negativity,
    measure_series,
    time_average,
    weak_coupling_prediction,
)
from .spectrum import (
    HmrGauge,
    OscillatorParams,
    Regime,
    bogoliubov,
    build_quadratic_form,
    classify_regime,
    closed_form_spectrum,
    stability_check,
)
from .symplectic import CovarianceState, ModeBasis, symplectic_eigenvalues

__version__ = "0.1.0"

__all__ = [
    "ConditioningWarning",
    "CovarianceState",
    "HmrGauge",
    "MeasureSeries",
    "MeasuredMode",
    "ModeBasis",
    "Model",
    "NotApplicableError",
    "NumericalError",
    "OscillatorParams",
    "ParameterError",
    "Regime",
    "SqueezeSpec",
    "Trajectory",
    "TrimodeError",
    "UnphysicalStateError",
    "bogoliubov",
    "build_quadratic_form",
    "classify_regime",
    "closed_form_spectrum",
    "dynamical_fidelity_susceptibility",
    "evolve_trajectory",
    "gaussian_discord",
    "gaussian_fidelity",
    "hmr_pt_eigenvalues",
    "initial_covariance",
    "log_negativity",
    "measure_series",
    "stability_check",
    "symplectic_eigenvalues",
    "time_average",
    "weak_coupling_prediction",
]
