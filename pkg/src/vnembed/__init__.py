"""Virtual network embedding with a chaotic hybrid flower-pollination node mapper."""
from .config import RaterConfig, RunConfig, load_config, save_config
from .errors import (AllocationError, ChaosStateError, GenerationError, IncompletePlanError,
                     InvalidPathError, LinkMappingError, NodeMappingError, VNEError)
from .hfpa import Individual, NodeSolver, SolverParams, solve_nodes
from .linkmap import balanced_weights, map_links
from .netmodel import (EmbeddingPlan, SubstrateLink, SubstrateNetwork, SubstrateNode,
                       VirtualLink, VirtualNetworkRequest, aggregate_unit_price, allocate,
                       check_constraints, qos_totals, quotation, release, revenue_and_cost)
from .sim import MetricsReport, compute_metrics, embed_request, run_config, run_scenario
from .topogen import ArrivalSchedule, ScenarioConfig, gen_schedule, gen_substrate, gen_vnr

__version__ = "0.1.0"
