"""Stable local limits for squared-variable convolutions and sphere diagnostics.

The package is organized as a small stack of pure numerical modules:

* :mod:`levy_kac.densities` — density models, squared-variable laws, moments,
  tail-law estimation.
* :mod:`levy_kac.stable` — stable-law parameters, characteristic functions,
  Fourier-inversion densities.
* :mod:`levy_kac.clt_engine` — characteristic functions of squared laws,
  certified N-fold convolution densities, local-CLT and remainder
  diagnostics.
* :mod:`levy_kac.kac_sphere` — normalisation function, sphere marginals,
  entropy/Fisher/transport diagnostics.
* :mod:`levy_kac.cli` — deterministic experiment driver (``levy-kac``).
"""
from __future__ import annotations

from .clt_engine import (
    ConvergenceRecord,
    FdaOrderReport,
    RemainderProbe,
    SpectralSample,
    charfn_h,
    clt_sup_error,
    fda_order_check,
    highfreq_gap,
    lowfreq_envelope,
    nfold_density,
    nfold_log_density,
    omega,
    remainder,
    sample_charfn,
)
from .densities import (
    DensityModel,
    MomentSummary,
    TailAsymptote,
    TailLaw,
    estimate_tail_law,
    h_of,
    make_model,
    moments,
    skew_fractions,
    trunc_fourth_moment,
)
from .errors import (
    CertificationError,
    DegenerateTailError,
    InfiniteRelativeEntropyError,
    InputValidationError,
    InvalidStableParameterError,
    LevyKacError,
    QuadratureError,
    TailFitError,
    UnknownModelError,
)
from .kac_sphere import (
    ChaosReport,
    GridDensity,
    SphereLaw,
    chaos_report,
    cross_entropy_per_particle,
    duality_lower_bound,
    entropy_per_particle,
    entropy_target,
    fisher_information,
    fisher_relative,
    l1_marginal_gap,
    log_normalisation,
    marginal_k,
    pinsker_margin,
    relative_entropy,
    sphere_law,
    w1_first_marginal,
)
from .stable import (
    SourceLaw,
    StableParams,
    charfn_stable,
    exponent_from_tail,
    stable_density,
    stable_density_at_zero,
)

__version__ = "0.1.0"

# the CLI reads __version__ from the package, so this import must stay below
from .cli import ExperimentConfig

__all__ = [
    "ExperimentConfig",
    "DensityModel",
    "MomentSummary",
    "TailAsymptote",
    "TailLaw",
    "estimate_tail_law",
    "h_of",
    "make_model",
    "moments",
    "skew_fractions",
    "trunc_fourth_moment",
    "SourceLaw",
    "StableParams",
    "charfn_stable",
    "exponent_from_tail",
    "stable_density",
    "stable_density_at_zero",
    "SpectralSample",
    "ConvergenceRecord",
    "RemainderProbe",
    "FdaOrderReport",
    "charfn_h",
    "sample_charfn",
    "nfold_density",
    "nfold_log_density",
    "clt_sup_error",
    "highfreq_gap",
    "lowfreq_envelope",
    "remainder",
    "omega",
    "fda_order_check",
    "SphereLaw",
    "ChaosReport",
    "GridDensity",
    "sphere_law",
    "log_normalisation",
    "marginal_k",
    "l1_marginal_gap",
    "entropy_per_particle",
    "entropy_target",
    "relative_entropy",
    "cross_entropy_per_particle",
    "fisher_relative",
    "fisher_information",
    "pinsker_margin",
    "w1_first_marginal",
    "duality_lower_bound",
    "chaos_report",
    "LevyKacError",
    "InputValidationError",
    "UnknownModelError",
    "InvalidStableParameterError",
    "QuadratureError",
    "TailFitError",
    "DegenerateTailError",
    "CertificationError",
    "InfiniteRelativeEntropyError",
    "__version__",
]
