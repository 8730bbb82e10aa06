"""Orthodromic routing, OR(r), for large satellite constellations.

Addresses are unit-sphere positions.  Each satellite floods link state r hops
out, computes a depth-r shortest-path tree, and forwards one hop toward the
tree node closest to the destination.
"""
from .constellation import (
    ConstellationGraph,
    OrbitalState,
    WalkerParams,
    apply_link_failures,
    build_walker_delta,
    hop_distances,
    propagate,
    reachable,
    with_links_down,
)
from .experiments import ExperimentConfig, ResultRow, min_radius_for_loss, run_sweep, write_csv
from .flooding import (
    FloodSimulator,
    ForwardDecision,
    LinkStateDatabase,
    LinkStateUpdate,
    age_out,
    handle_lsu,
    local_view,
    originate_lsu,
    run_flood_convergence,
)
from .geometry import DistKey, NodeAddress, UnitVector, angle, dist_key, mu_hat
from .routing import (
    Outcome,
    RouteTrace,
    check_monotone,
    greedy_bottleneck,
    route_packet,
    route_with_oracle_views,
)
from .spf import (
    ForwardingTable,
    SpfTree,
    build_forwarding_table,
    lookup_comparator_tree,
    lookup_linear,
    refresh_positions,
    spf_bounded,
)

__version__ = "0.1.0"
