"""Revenue-maximizing qualification thresholds for allocating identical VMs."""
from .dist import ComplexityDistribution, Exponential
from .errors import (CapacityClampWarning, ConfigurationError, ConvergenceWarning,
                     DomainError, EvaluationError, SolverError, TableFormatError,
                     TableValidationError)
from .oracle import DpConfig, dp_threshold, perturbation_check
from .policy import (PolicyTable, PricingParams, build_table, load_table, lookup, price,
                     save_table)
from .revenue import (RevenueQuery, expected_revenue, qualified_intensity,
                      waiting_density)
from .sim import CapacityEvent, Scenario, SimResult, generate_arrivals, monte_carlo, run
from .solver import (SolverConfig, ThresholdCurve, TimeGrid, infinite_limit_threshold,
                     j_factor, solve_family, solve_plan, solve_threshold)

__version__ = "0.1.0"
