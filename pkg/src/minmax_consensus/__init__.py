"""Min/max consensus dynamics on fixed, switching and state-dependent graphs."""

__version__ = "0.1.0"

from .graph import (
    Digraph,
    EdgeListError,
    centers,
    complete_digraph,
    cycle_digraph,
    diameter,
    is_bidirectional,
    is_connected,
    is_quasi_strongly_connected,
    is_strongly_connected,
    neighbors,
    path_digraph,
    random_digraph,
    read_edge_list,
    strongly_connected_components,
    union,
    write_edge_list,
)
from .schedule import ConnectivityClass, GraphSchedule, classify, graph_at, joint_graph
from .params import (
    Constant,
    Geometric,
    Listed,
    OneMinus,
    ParamSchedule,
    Power,
    algorithm_class,
    in_class,
)
from .neighbor_rules import NeighborRule, build_graph, neighbor_extrema
from .dynamics import RunTrace, phi, run, step, upsilon
from .analysis import (
    ConditionVerdict,
    SweepReport,
    check_block_product_condition,
    check_contraction_eq6,
    check_max_step_bounds,
    check_phi_lower_bound,
    check_thm2_necessary,
    check_unique_extremes_preserved,
    reduced_step_mu1,
    threshold_sweep,
)
