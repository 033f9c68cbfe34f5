"""Pure Hotelling games on metric graphs.

Players pick points of a network, consumers spread with a density shop at
the nearest chosen point, and each player earns the consumer mass it
attracts. The package evaluates payoffs exactly, builds approximate
equilibrium profiles for many players, computes the accompanying bounds, and
certifies best responses.
"""

from .construction import (BoundSet, ConstructionError, ConstructionResult, PreconditionError,
                           annex_diagnostics, bounds, build_profile, construct_equilibrium, theta_bar)
from .counterexamples import (counterexample_increasing, counterexample_quartile,
                              counterexample_three_players, quantile)
from .density import (Density, StepDensity, integrate, step_approximate, step_cap, total_mass,
                      validate_density)
from .graph import (GraphPoint, MetricGraph, SubInterval, contract_degree_two, cycle_graph, distance,
                    distance_field, path_graph, star_graph, theta_graph, total_length, validate)
from .payoff import AttractionPartition, Profile, attraction_partition, payoffs
from .verify import (BestResponseResult, EquilibriumReport, best_response, check_epsilon_equilibrium,
                     deviation_payoff)

__version__ = "0.1.0"

__all__ = [
    "AttractionPartition", "BestResponseResult", "BoundSet", "ConstructionError", "ConstructionResult",
    "Density", "EquilibriumReport", "GraphPoint", "MetricGraph", "PreconditionError", "Profile",
    "StepDensity", "SubInterval", "annex_diagnostics", "attraction_partition", "best_response", "bounds",
    "build_profile", "check_epsilon_equilibrium", "construct_equilibrium", "contract_degree_two",
    "counterexample_increasing", "counterexample_quartile", "counterexample_three_players",
    "cycle_graph", "deviation_payoff", "distance", "distance_field", "integrate", "path_graph",
    "payoffs", "quantile", "star_graph", "step_approximate", "step_cap", "theta_bar", "theta_graph",
    "total_length", "total_mass", "validate", "validate_density",
]
