"""Stable b-matchings of acyclic preference-based systems.

Simulation (seeded instance generation + greedy stable configuration),
empirical estimators, and the analytical counterparts: mean-field
recursions, an exact recursion for node-based simple matching, and
closed-form / integrated fluid limits.
"""

from .core import (
    Adjacency,
    Configuration,
    Instance,
    acceptable_rank,
    complete_rank,
    prefers,
)
from .engine import (
    InvalidConfigurationError,
    stable_configuration,
    symmetric_edge_key,
    verify_stability,
)
from .generate import (
    GenSpec,
    LoadError,
    edge_prob_from_degree,
    gen_acceptance,
    gen_marks,
    instance_stream,
    load_latency_matrix,
    make_instance,
    matrix_instance,
    subsample,
)
from .meanfield import (
    PairDistribution,
    RankDistribution,
    brute_force_node_b1,
    solve_node_b1,
    solve_node_bmatch,
    solve_node_exact_b1,
    solve_rank_b1,
    solve_rank_bmatch,
)
from .fluid import (
    FluidCurve,
    acceptable_rank_ccdf,
    ball_volume,
    d_inf_node,
    dr1_constant,
    exp_integral_e1,
    fluid_node_bmatch,
    fluid_rank_bmatch,
    reg_inc_beta,
    s_distance,
    s_inf_node,
    s_inf_rank,
    s_rank_approx,
    unmatched_prob_node,
)
from .metrics import (
    EmpiricalCurve,
    aspl,
    clustering,
    collect,
    eccentricity_stats,
    empirical_acceptable_rank,
    empirical_distance_ccdf,
    empirical_pair_dist,
    empirical_rank_dist,
)

__version__ = "0.1.0"
