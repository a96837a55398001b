"""Penalized zero-inflated Bernoulli regression."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DatasetValidationError,
    DomainError,
    NumericalFailure,
    ShapeError,
    StudyError,
    ValidationError,
)
from .likelihood import finite_difference_gradient, log_likelihood, observed_information, score  # noqa: E402
from .model import (  # noqa: E402
    Dataset,
    MixtureProbabilities,
    Parameters,
    event_probability,
    logistic,
    mixture_pmf,
    mixture_probabilities,
    validate_dataset,
    zero_inflation_probability,
)
from .optimizer import FitOptions, FitResult, fit, fit_unpenalized, kkt_check  # noqa: E402
from .penalty import (  # noqa: E402
    PenaltySpec,
    penalized_objective,
    penalty_subgradient,
    penalty_value,
    proximal_step,
)
from .selection import (  # noqa: E402
    LambdaGrid,
    PathResult,
    aic,
    bic,
    cross_validate,
    lambda_path,
    standard_errors,
    wald_intervals,
)
from .simulation import SCENARIO_1, SCENARIO_2, Scenario, SimulationReport, metrics, run_study  # noqa: E402
