"""Numerical toolkit for pricing machine-learning data services.

Calibrates saturating data-utility curves from (size, error) measurements and
solves the resulting three-tier market: the service provider's joint choice of
data volume and subscription fee, and the data source's leading price.
"""

from .calibration import (
    CsvFormatError,
    DegenerateDataError,
    ExperimentPoint,
    FitOptions,
    FitResult,
    fit,
    generate_synthetic,
    load_points,
    residual_sse,
    save_points,
)
from .provider import (
    BracketError,
    CandidateRoot,
    ClosedFormUnavailable,
    MarketParams,
    ProviderDecision,
    ProviderSolution,
    SolveMethod,
    UnboundedDemandError,
    WtpDistribution,
    closed_form_exponential,
    closed_form_fraction,
    default_n_bracket,
    optimize_fixed_n,
    optimize_fixed_ps,
    optimize_numeric,
    profit,
    raw_profit,
    reduced_profit,
    shutoff_price,
)
from .stackelberg import (
    DemandPoint,
    NoTradeError,
    StackelbergEquilibrium,
    demand,
    demand_curve,
    demand_curve_to_csv,
    leader_profit,
    solve_equilibrium,
)
from .utility import (
    DomainError,
    Family,
    ParameterError,
    UtilityParams,
    deriv1,
    deriv2,
    evaluate,
    feasible_domain,
)

__version__ = "0.1.0"
