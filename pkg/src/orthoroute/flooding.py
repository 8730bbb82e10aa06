"""TTL-limited link-state flooding over a deterministic discrete-event harness.

Each satellite originates an LSU describing its own ISLs.  Receivers keep the
highest sequence number per origin, decrement the TTL on receipt and pass the
update on (except back over the arrival link) while the decremented TTL is
still positive.  With an initial TTL of ``r`` this delivers an origin's LSU to
exactly the nodes within ``r`` Up hops of it, provided the first copy to
arrive at each node took a shortest path.  Equal per-hop latency and
time-ordered dispatch guarantee that.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field, replace

from .constellation import ConstellationGraph
from .geometry import UnitVector

log = logging.getLogger(__name__)

DEFAULT_HOP_LATENCY = 0.005


class ForwardDecision(enum.Enum):
    IGNORE = "IGNORE"
    STORE_ONLY = "STORE"
    STORE_AND_FORWARD = "FORWARD"


class MalformedLSU(ValueError):
    pass


@dataclass(frozen=True)
class LinkStateUpdate:
    origin: int
    seq: int
    ttl: int
    adjacencies: tuple[tuple[int, int, bool], ...]  # (neighbor, isl, up)
    position: UnitVector
    angular_rate: float
    orbit_normal: tuple[float, float, float]
    originated_at: float


@dataclass
class LinkStateDatabase:
    owner: int
    entries: dict[int, tuple[LinkStateUpdate, float]] = field(default_factory=dict)
    rejected: int = 0

    def __contains__(self, origin: int) -> bool:
        return origin in self.entries

    def origins(self) -> set[int]:
        return set(self.entries)

    def get(self, origin: int) -> LinkStateUpdate | None:
        entry = self.entries.get(origin)
        return entry[0] if entry else None


def originate_lsu(node: int, graph: ConstellationGraph, r: int, seq: int, now: float) -> LinkStateUpdate:
    if r < 1:
        raise ValueError("flood radius must be at least 1")
    adjacencies = []
    for isl in range(1, 5):
        state = graph.link_state(node, isl)
        if state is not None:
            adjacencies.append((state[0], isl, state[1]))
    orbit = graph.orbital_state(node)
    return LinkStateUpdate(
        origin=node,
        seq=seq,
        ttl=r,
        adjacencies=tuple(adjacencies),
        position=UnitVector.from_array(graph.positions[node]),
        angular_rate=orbit.angular_rate,
        orbit_normal=tuple(float(c) for c in orbit.orbit_normal()),
        originated_at=now,
    )


def _validate(lsu: LinkStateUpdate) -> None:
    if lsu.ttl < 0:
        raise MalformedLSU(f"negative ttl {lsu.ttl} from origin {lsu.origin}")
    isls = [isl for _, isl, _ in lsu.adjacencies]
    if not 1 <= len(isls) <= 4 or len(set(isls)) != len(isls) or not all(1 <= i <= 4 for i in isls):
        raise MalformedLSU(f"bad adjacency list from origin {lsu.origin}: {lsu.adjacencies}")


def handle_lsu(node_db: LinkStateDatabase, incoming: LinkStateUpdate, now: float) -> ForwardDecision:
    """Apply one received LSU to a database and say what to do with it.

    A forwarded copy carries ``incoming.ttl - 1``.  Malformed updates are
    counted on the database and raised as :class:`MalformedLSU`.
    """
    try:
        _validate(incoming)
    except MalformedLSU:
        node_db.rejected += 1
        raise
    stored = node_db.entries.get(incoming.origin)
    if stored is not None and stored[0].seq >= incoming.seq:
        return ForwardDecision.IGNORE
    node_db.entries[incoming.origin] = (incoming, now)
    if incoming.ttl - 1 > 0:
        return ForwardDecision.STORE_AND_FORWARD
    return ForwardDecision.STORE_ONLY


def age_out(db: LinkStateDatabase, now: float, V: float) -> list[int]:
    """Drop entries not refreshed for more than ``V`` seconds.  The owner's own entry stays."""
    if V <= 0:
        raise ValueError("aging period must be positive")
    stale = sorted(o for o, (_, t) in db.entries.items() if now - t > V and o != db.owner)
    for o in stale:
        del db.entries[o]
    return stale


class FloodSimulator:
    """Single-threaded event harness flooding LSUs over a static graph.

    Links deliver reliably and in order after ``hop_latency`` seconds.  Events
    at equal times dispatch in scheduling order.  If ``trace`` is a list,
    one ``time origin seq ttl from to action`` line is appended per received LSU.
    """

    def __init__(self, graph: ConstellationGraph, r: int, hop_latency: float = DEFAULT_HOP_LATENCY,
                 trace: list[str] | None = None):
        if r < 1:
            raise ValueError("flood radius must be at least 1")
        self.graph = graph
        self.r = r
        self.hop_latency = hop_latency
        self.trace = trace
        self.now = 0.0
        self.dbs = {v: LinkStateDatabase(v) for v in range(graph.n_nodes)}
        self._seq = Counter()
        self._queue: list = []
        self._tiebreak = itertools.count()
        # (origin, seq, from, to) -> copies sent; bounded by 1 per direction
        self.link_messages: Counter = Counter()
        self.messages_sent = 0
        self.last_delivery = 0.0

    def originate(self, node: int, now: float | None = None) -> LinkStateUpdate:
        if now is not None:
            self.now = max(self.now, now)
        self._seq[node] += 1
        lsu = originate_lsu(node, self.graph, self.r, self._seq[node], self.now)
        self.dbs[node].entries[node] = (lsu, self.now)
        self._send(node, lsu, arrived_from=None)
        return lsu

    def _send(self, node: int, lsu: LinkStateUpdate, arrived_from: int | None) -> None:
        for nb in self.graph.up_neighbors[node]:
            if nb == arrived_from:
                continue
            key = (lsu.origin, lsu.seq, node, nb)
            self.link_messages[key] += 1
            if self.link_messages[key] > 1:
                raise AssertionError(f"LSU {lsu.origin}/{lsu.seq} sent twice on {node}->{nb}")
            self.messages_sent += 1
            heapq.heappush(self._queue, (self.now + self.hop_latency, next(self._tiebreak), node, nb, lsu))

    def step(self) -> bool:
        if not self._queue:
            return False
        t, _, src, dst, lsu = heapq.heappop(self._queue)
        self.now = t
        self.last_delivery = t
        db = self.dbs[dst]
        try:
            action = handle_lsu(db, lsu, t)
        except MalformedLSU as exc:
            log.warning("node %d rejected LSU: %s", dst, exc)
            return True
        if self.trace is not None:
            self.trace.append(f"{t:.6f} {lsu.origin} {lsu.seq} {lsu.ttl} {src} {dst} {action.value}")
        if action is ForwardDecision.STORE_AND_FORWARD:
            self._send(dst, replace(lsu, ttl=lsu.ttl - 1), arrived_from=src)
        return True

    def run(self, until: float | None = None) -> int:
        """Dispatch events (up to time ``until``) and return how many ran."""
        n = 0
        while self._queue and (until is None or self._queue[0][0] <= until):
            self.step()
            n += 1
        if until is not None:
            self.now = max(self.now, until)
        return n

    def age_out_all(self, now: float, V: float) -> dict[int, list[int]]:
        self.now = max(self.now, now)
        return {v: age_out(db, now, V) for v, db in self.dbs.items()}


def run_flood_convergence(graph: ConstellationGraph, r: int, V: float = 90.0,
                          hop_latency: float = DEFAULT_HOP_LATENCY) -> dict[int, LinkStateDatabase]:
    """Every node originates once at t=0; events run to quiescence."""
    sim = FloodSimulator(graph, r, hop_latency)
    for v in range(graph.n_nodes):
        sim.originate(v, 0.0)
    sim.run()
    # convergence takes r * hop_latency, far inside any sane aging period
    sim.age_out_all(sim.now, V)
    return sim.dbs


@dataclass
class LocalView:
    """A node's r-hop picture of the mesh, assembled from its database.

    ``adjacency[v]`` lists ``(neighbor, isl at v)`` for Up links, in ISL order.
    """

    root: int
    positions: dict[int, UnitVector]
    adjacency: dict[int, list[tuple[int, int]]]
    lsus: dict[int, LinkStateUpdate] = field(default_factory=dict, repr=False)

    @property
    def nodes(self) -> set[int]:
        return set(self.positions)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(min(u, v), max(u, v)) for u, nbs in self.adjacency.items() for v, _ in nbs}


def local_view(db: LinkStateDatabase, self_lsu: LinkStateUpdate) -> LocalView:
    """Subgraph over known origins.

    A link enters the view only when both endpoints are known (the far end's
    address comes from its own LSU) and neither endpoint reports it Down.
    """
    lsus = {o: lsu for o, (lsu, _) in db.entries.items()}
    lsus[self_lsu.origin] = self_lsu
    reported = {}
    for o, lsu in lsus.items():
        for nb, isl, up in lsu.adjacencies:
            reported[(o, nb)] = (isl, up)
    adjacency = {o: [] for o in lsus}
    for (o, nb), (isl, up) in reported.items():
        if nb not in lsus or not up:
            continue
        back = reported.get((nb, o))
        if back is not None and not back[1]:
            continue
        adjacency[o].append((nb, isl))
    for nbs in adjacency.values():
        nbs.sort(key=lambda t: t[1])
    return LocalView(
        root=self_lsu.origin,
        positions={o: lsu.position for o, lsu in lsus.items()},
        adjacency=adjacency,
        lsus=lsus,
    )


def views_from_flooding(graph: ConstellationGraph, r: int, V: float = 90.0) -> dict[int, LocalView]:
    dbs = run_flood_convergence(graph, r, V)
    return {v: local_view(db, db.get(v)) for v, db in dbs.items()}
