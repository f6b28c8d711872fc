from .chaos import (CHAOS_U, ChaosState, admissible_seed, chaos_mask, is_admissible_seed,
                    is_degenerate, logistic_next, logistic_sequence, mask_from_sequence)
from .operators import (Individual, chaos_crossover, feasibility_repair, is_feasible, lifespan_of,
                        mutate, pollinated_genes, random_individual, recycle_individual,
                        select_elite, self_pollinate, sign_pollen, single_point_crossover)
from .solver import NodeSolver, SolverParams, SolverStats, TraceRow, solve_nodes, write_trace_csv

__all__ = [
    "CHAOS_U", "ChaosState", "Individual", "NodeSolver", "SolverParams", "SolverStats",
    "TraceRow", "admissible_seed", "chaos_crossover", "chaos_mask", "feasibility_repair",
    "is_admissible_seed", "is_degenerate", "is_feasible", "lifespan_of", "logistic_next",
    "logistic_sequence", "mask_from_sequence", "mutate", "pollinated_genes", "random_individual",
    "recycle_individual", "select_elite", "self_pollinate", "sign_pollen",
    "single_point_crossover", "solve_nodes", "write_trace_csv",
]
