"""Conditionally-Poisson counting processes: simulation, compensators,
likelihood ratios against standard reference processes, and empirical
martingale checks."""

from .compensator import (
    AnticipativityReport,
    IntensityPath,
    MartingaleTestReport,
    Probe,
    anticipative_intensity,
    anticipativity_report,
    constant_probe,
    count_at_least,
    count_equals,
    dyadic_approximation,
    ihf_compensator,
    instantaneous_rate_estimate,
    martingale_residual_test,
    model_compensator,
    predictable_projection_check,
)
from .core import (
    CompensatorPath,
    ConstantRate,
    Defective,
    DeterministicBaseline,
    DomainError,
    EventSequence,
    ExplosionError,
    Exponential,
    HawkesConst,
    HawkesExp,
    HazardInconsistencyError,
    HazardSpec,
    NumericFailure,
    OneShot,
    PiecewiseCdf,
    PointMass,
    RandomStream,
    ValidationError,
    compensator_eval,
    intensity_at,
    make_model,
)
from .gaussian import (
    GaussianPath,
    VariancePath,
    VelocityPath,
    girsanov_log_ratio,
    simulate_wiener_additive,
    variance_equivalence_check,
)
from .likelihood import FitResult, fit_mle, gof_exp1, log_likelihood_ratio, time_rescale
from .markov import (
    AbsoluteContinuityError,
    MarkovModel,
    abs_continuity_check,
    fit_markov,
    markov_log_ratio,
    markov_martingale_residual,
    simulate_markov,
)
from .simulate import simulate_ensemble, simulate_from_hazard, simulate_thinning

__version__ = "0.1.0"
