"""Hop-by-hop OR(r) packet routing with a verifiable per-packet trace.

At the current node C the router builds the depth-r SPF tree, picks the tree
node I closest to the destination D (C itself included), drops the packet if
that is C, and otherwise moves one hop along the tree toward I.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from .constellation import ConstellationGraph
from .flooding import LocalView
from .geometry import DistKey, NodeAddress, dist_key, preference_rank
from .spf import spf_bounded


class Outcome(str, enum.Enum):
    DELIVERED = "Delivered"
    DROPPED_NO_PROGRESS = "DroppedNoProgress"
    ABORTED_HOP_LIMIT = "AbortedHopLimit"


class ViewInconsistency(RuntimeError):
    """A local view steered the packet onto a link the graph does not have Up."""


class Hop(NamedTuple):
    current: int
    target: int
    next: int
    key: DistKey
    target_depth: int  # hops from current to target in this tree


@dataclass
class RouteTrace:
    source: int
    dest: int
    radius: int
    hops: list[Hop] = field(default_factory=list)
    outcome: Outcome | None = None
    # the node where the walk ended: D when delivered, the stuck node when dropped
    final_node: int | None = None

    @property
    def hop_count(self) -> int:
        return len(self.hops)

    @property
    def delivered(self) -> bool:
        return self.outcome is Outcome.DELIVERED

    def lines(self) -> list[str]:
        out = [f"hop {h.current} {h.target} {h.next} {h.key.primary:.9f}" for h in self.hops]
        out.append(f"outcome={self.outcome.value} hops={self.hop_count}")
        return out


def _check_ids(graph: ConstellationGraph, s: int, d: int, r: int) -> None:
    n = graph.n_nodes
    for name, v in (("source", s), ("destination", d)):
        if not 0 <= v < n:
            raise ValueError(f"{name} {v} is not a node id in [0, {n})")
    if r < 1:
        raise ValueError("radius must be at least 1")


def route_packet(graph: ConstellationGraph, views: Mapping[int, LocalView], s: int, d: int, r: int,
                 hop_limit: int | None = None) -> RouteTrace:
    """Route one packet using each visited node's own local view."""
    _check_ids(graph, s, d, r)
    if hop_limit is None:
        hop_limit = graph.n_nodes * r
    dest = graph.address(d)
    trace = RouteTrace(s, d, r)
    c = s
    while True:
        if c == d:
            trace.outcome = Outcome.DELIVERED
            break
        view = views[c]
        tree = spf_bounded(view, c, r)
        best, best_key = None, None
        for v in tree.depth:
            key = dist_key(NodeAddress(v, view.positions[v]), dest)
            if best_key is None or key < best_key:
                best, best_key = v, key
        if best == c:
            trace.outcome = Outcome.DROPPED_NO_PROGRESS
            break
        if trace.hop_count >= hop_limit:
            trace.outcome = Outcome.ABORTED_HOP_LIMIT
            break
        nxt, _ = tree.first_hop(best)
        if nxt not in graph.up_neighbors[c]:
            raise ViewInconsistency(f"view at {c} routes over {c}-{nxt}, which is not Up")
        trace.hops.append(Hop(c, best, nxt, best_key, tree.depth[best]))
        c = nxt
    trace.final_node = c
    return trace


def _gateway_step(adj: list[list[int]], rank: list[int], root: int, r: int, d: int):
    """Best tree node within ``r`` hops of ``root``, with the first hop toward it.

    Equivalent to building the full depth-r SPF tree and scanning it, except
    the search stops at the destination's layer once D is seen: D outranks
    every other node and tree paths depend only on the layers above.
    """
    # -1 pads missing ports in the adjacency table; marking it seen skips them
    parent = {root: root, -1: -1}
    best, best_rank = root, rank[root]
    frontier = [root]
    for _ in range(r):
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in parent:
                    parent[v] = u
                    nxt.append(v)
        if not nxt:
            break
        cand = min(nxt, key=rank.__getitem__)
        if rank[cand] < best_rank:
            best, best_rank = cand, rank[cand]
        if best == d:
            break
        nxt.sort()
        frontier = nxt
    if best == root:
        return root, root, 0
    depth = 1
    v = best
    while parent[v] != root:
        v = parent[v]
        depth += 1
    return best, v, depth


def route_with_oracle_views(graph: ConstellationGraph, s: int, d: int, r: int,
                            hop_limit: int | None = None) -> RouteTrace:
    """Route with each node's view taken straight from the graph's r-hop ball.

    Converged flooding produces exactly that ball, so the trace matches
    :func:`route_packet` over flooded views.
    """
    _check_ids(graph, s, d, r)
    if hop_limit is None:
        hop_limit = graph.n_nodes * r
    adj = graph.up_table
    rank = preference_rank(graph.positions, d).tolist()
    dest = graph.address(d)
    trace = RouteTrace(s, d, r)
    c = s
    while True:
        if c == d:
            trace.outcome = Outcome.DELIVERED
            break
        best, nxt, depth = _gateway_step(adj, rank, c, r, d)
        if best == c:
            trace.outcome = Outcome.DROPPED_NO_PROGRESS
            break
        if trace.hop_count >= hop_limit:
            trace.outcome = Outcome.ABORTED_HOP_LIMIT
            break
        trace.hops.append(Hop(c, best, nxt, dist_key(graph.address(best), dest), depth))
        c = nxt
    trace.final_node = c
    return trace


def check_monotone(trace: RouteTrace) -> list[str]:
    """Violations of the gateway-sequence properties, empty when the trace is sound.

    Chosen targets must never get worse in DistKey, and one target may be
    chosen on at most as many consecutive hops as its tree depth when first
    chosen.
    """
    problems = []
    hops = trace.hops
    if hops and hops[0].current != trace.source:
        problems.append(f"trace starts at {hops[0].current}, not source {trace.source}")
    for k in range(1, len(hops)):
        if hops[k].current != hops[k - 1].next:
            problems.append(f"hop {k} starts at {hops[k].current}, previous hop ended at {hops[k - 1].next}")
        if hops[k].key > hops[k - 1].key:
            problems.append(f"hop {k}: target {hops[k].target} is farther than {hops[k - 1].target}")
    run_start = 0
    for k in range(1, len(hops) + 1):
        if k == len(hops) or hops[k].target != hops[run_start].target:
            budget = hops[run_start].target_depth
            if k - run_start > budget:
                problems.append(
                    f"target {hops[run_start].target} chosen {k - run_start} times, tree depth {budget}"
                )
            run_start = k
    if trace.outcome is Outcome.DELIVERED and hops and hops[-1].next != trace.dest:
        problems.append("delivered trace does not end at the destination")
    return problems


def greedy_bottleneck(graph: ConstellationGraph, s: int, d: int) -> tuple[int, int] | None:
    """First node on the failure-free OR(1) path from ``s`` to ``d`` that has a single improving neighbour.

    Returns ``(C, N)`` where N is the only neighbour of C that C would
    forward to.  Failing the C-N link then strands an OR(1) packet at C.
    """
    trace = route_with_oracle_views(graph, s, d, 1)
    if not trace.delivered:
        return None
    rank = preference_rank(graph.positions, d)
    # skip the source: the stranded node should lie strictly between S and D
    for hop in trace.hops[1:]:
        c = hop.current
        better = [v for v in graph.up_neighbors[c] if rank[v] < rank[c]]
        if len(better) == 1:
            return c, better[0]
    return None
