"""Online stochastic bipartite matching with commitment and patience."""
from .graph import (EDGE_WEIGHTED, UNWEIGHTED, VERTEX_WEIGHTED, EdgeStateSample, GraphError, InstantiatedGraph,
                    StochasticGraph, TypeGraphInstance, induced_subgraph, instantiate_iid, make_graph,
                    make_type_instance, named_example, sample_states, validate)
from .lp_solver import LinearProgram, LpSolution, solve
from .formulations import (ContributionVector, EdgeVariables, TupleColumn, build_formulation, contributions,
                           edge_vars_from_solution, g_coeff)
from .pricing import column_generation_solve, separation_oracle, star_sequence_dp
from .probing import ProbeTranscript, vertex_probe, vertex_probe_s
from .algorithms import (ArrivalModel, RunResult, run_known, run_known_iid, run_unknown_rom, solve_known,
                         solve_known_iid)
from .benchmarks import (BenchmarkLimits, opt_committal_exact, opt_committal_iid_mc, opt_noncommittal_exact,
                         opt_online_fixed_order, opt_star, order_gap)
from .simulate import SimConfig, SimReport, estimate_batch, estimate_value, ratio_report

__version__ = "0.1.0"
