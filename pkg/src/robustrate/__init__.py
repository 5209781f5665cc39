"""Worst-case portfolio optimization under a Hull-White short rate.

Closed-form saddle point of the investor-vs-market game with HARA utility,
HJBI grid certification of the saddle inequalities, Monte Carlo validation
under drift-tilted measures, and the constrained variant with the drift
kernel confined to a compact convex set.
"""

from .closedform import (SolutionPair, ValueQuery, martingale_gap,
                         saddle_point, solve, solve_f, solve_g,
                         traditional_strategy, value_function)
from .curves import CoefficientCurve, eval_curve
from .errors import (BudgetExceededError, ConfigError, CurveDomainError,
                     DegenerateParameterError, GridMismatchError,
                     InvalidModelError, SingularCoefficientError)
from .hjbi import (GridSpec, HQuery, SaddleCertificate, certify_saddle,
                   h_value, l_operator, make_value_evaluator)
from .model import (MarketModel, StatePoint, Violation, bond_volatility,
                    bond_volatility_curve, validate_model)
from .montecarlo import (GameEstimate, MartingaleGapEstimate, RateSimulation,
                         SimConfig, estimate_J, martingale_gap_mc,
                         simulate_rate_paths, simulate_wealth)
from .restricted import (GammaSet, IsaacsReport, RestrictedSolution,
                         check_isaacs_equality, eta_objective, minimize_eta,
                         restricted_g, restricted_saddle)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError", "CoefficientCurve", "ConfigError",
    "CurveDomainError", "DegenerateParameterError", "GameEstimate",
    "GammaSet", "GridMismatchError", "GridSpec", "HQuery", "InvalidModelError",
    "IsaacsReport", "MarketModel", "MartingaleGapEstimate", "RateSimulation",
    "RestrictedSolution", "SaddleCertificate", "SimConfig",
    "SingularCoefficientError", "SolutionPair", "StatePoint", "ValueQuery",
    "Violation", "bond_volatility", "bond_volatility_curve", "certify_saddle",
    "check_isaacs_equality", "estimate_J", "eta_objective", "eval_curve",
    "h_value", "l_operator", "make_value_evaluator", "martingale_gap",
    "martingale_gap_mc", "minimize_eta", "restricted_g", "restricted_saddle",
    "saddle_point", "simulate_rate_paths", "simulate_wealth", "solve",
    "solve_f", "solve_g", "traditional_strategy", "validate_model",
    "value_function",
]
