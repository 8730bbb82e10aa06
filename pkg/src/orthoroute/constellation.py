"""Walker Delta constellations as degree-4 ISL graphs on the unit sphere.

Node ``plane * sats_per_plane + slot`` carries four ISL ports:

    1  intra-plane forward   (slot + 1)
    2  intra-plane backward  (slot - 1)
    3  next plane            (plane + 1, same slot)
    4  previous plane        (plane - 1, same slot)

Both intra-plane and inter-plane rings wrap, so the ISL mesh is a torus.
Positions are circular orbits of radius 1 in an inertial frame.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .geometry import NodeAddress, UnitVector

# circular orbit at roughly 550 km altitude, period ~5730 s
DEFAULT_ANGULAR_RATE = 2 * math.pi / 5730.0

ISL_FORWARD, ISL_BACKWARD, ISL_NEXT_PLANE, ISL_PREV_PLANE = 1, 2, 3, 4


@dataclass(frozen=True)
class WalkerParams:
    planes: int
    sats_per_plane: int
    inclination: float
    phasing_factor: int = 0
    angular_rate: float = DEFAULT_ANGULAR_RATE
    seam_links: bool = True

    def __post_init__(self):
        if self.planes < 3 or self.sats_per_plane < 3:
            raise ValueError(
                f"need planes >= 3 and sats_per_plane >= 3, got {self.planes} x {self.sats_per_plane}"
            )
        if not 0 < self.inclination <= math.pi / 2:
            raise ValueError(f"inclination {self.inclination} rad outside (0, pi/2]")
        if not 0 <= self.phasing_factor <= self.planes - 1:
            raise ValueError(f"phasing factor {self.phasing_factor} outside [0, {self.planes - 1}]")
        if not self.angular_rate > 0:
            raise ValueError("angular_rate must be positive")

    @property
    def n_nodes(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def period(self) -> float:
        return 2 * math.pi / self.angular_rate

    @classmethod
    def degrees(cls, planes: int, sats_per_plane: int, inclination_deg: float = 53.0, **kw) -> "WalkerParams":
        return cls(planes, sats_per_plane, math.radians(inclination_deg), **kw)


@dataclass(frozen=True)
class OrbitalState:
    """Where a satellite sits in the constellation and how it moves."""

    plane_index: int
    slot_index: int
    raan: float
    phase: float
    inclination: float
    angular_rate: float

    def position(self, t: float) -> np.ndarray:
        return _orbit_positions(
            np.array([self.raan]), np.array([self.phase]), self.inclination, self.angular_rate, t
        )[0]

    def orbit_normal(self) -> np.ndarray:
        si = math.sin(self.inclination)
        return np.array([math.sin(self.raan) * si, -math.cos(self.raan) * si, math.cos(self.inclination)])


def _orbit_positions(raan, phase, inclination, angular_rate, t):
    u = phase + angular_rate * t
    cu, su = np.cos(u), np.sin(u)
    co, so = np.cos(raan), np.sin(raan)
    ci, si = math.cos(inclination), math.sin(inclination)
    return np.column_stack([co * cu - so * su * ci, so * cu + co * su * ci, su * si])


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ConstellationGraph:
    """Walker Delta ISL graph.  Treat as immutable; derived graphs share arrays.

    ``neighbors[v, k]`` and ``edge_index[v, k]`` give the far node and edge
    number on ISL ``k + 1`` of node ``v`` (-1 where no link exists).
    """

    params: WalkerParams
    epoch_time: float
    positions: np.ndarray  # (N, 3)
    plane: np.ndarray
    slot: np.ndarray
    edges: np.ndarray  # (E, 2) node ids
    edge_isl: np.ndarray  # (E, 2) isl index at each endpoint
    up: np.ndarray  # (E,) bool
    neighbors: np.ndarray = field(repr=False)
    edge_index: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def address(self, v: int) -> NodeAddress:
        return NodeAddress(int(v), UnitVector.from_array(self.positions[v]))

    def orbital_state(self, v: int) -> OrbitalState:
        p = self.params
        plane, slot = int(self.plane[v]), int(self.slot[v])
        return OrbitalState(
            plane,
            slot,
            raan=2 * math.pi * plane / p.planes,
            phase=float(_phase(p, plane, slot)),
            inclination=p.inclination,
            angular_rate=p.angular_rate,
        )

    @property
    def nodes(self) -> list[tuple[NodeAddress, OrbitalState]]:
        return [(self.address(v), self.orbital_state(v)) for v in range(self.n_nodes)]

    def edge_list(self) -> list[tuple[int, int, int, int, bool]]:
        return [
            (int(a), int(b), int(ia), int(ib), bool(u))
            for (a, b), (ia, ib), u in zip(self.edges, self.edge_isl, self.up)
        ]

    def degree(self, v: int) -> int:
        """Incident ISLs, counting Down ones."""
        return int(np.count_nonzero(self.edge_index[v] >= 0))

    def link_state(self, v: int, isl: int) -> tuple[int, bool] | None:
        """``(neighbor, is_up)`` on port ``isl`` of ``v``, or None if no link is fitted."""
        e = int(self.edge_index[v, isl - 1])
        if e < 0:
            return None
        return int(self.neighbors[v, isl - 1]), bool(self.up[e])

    def find_edge(self, a: int, b: int) -> int:
        for k in range(4):
            if self.neighbors[a, k] == b and self.edge_index[a, k] >= 0:
                return int(self.edge_index[a, k])
        raise KeyError(f"no ISL between {a} and {b}")

    @cached_property
    def up_table(self) -> list[list[int]]:
        """Per node, four entries in ISL order: the far end if the link is Up, else -1."""
        has = self.edge_index >= 0
        alive = np.zeros(self.edge_index.shape, dtype=bool)
        alive[has] = self.up[self.edge_index[has]]
        return np.where(alive, self.neighbors, -1).tolist()

    @cached_property
    def up_neighbors(self) -> list[list[int]]:
        """Per node, the far ends of its Up links in ISL order."""
        return [[v for v in row if v >= 0] for row in self.up_table]

    def with_up(self, up: np.ndarray) -> "ConstellationGraph":
        up = np.asarray(up, dtype=bool).copy()
        if up.shape != self.up.shape:
            raise ValueError("edge state vector has the wrong length")
        return replace(self, up=_frozen(up))

    def structurally_equal(self, other: "ConstellationGraph", atol: float = 0.0) -> bool:
        return (
            self.params == other.params
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.edge_isl, other.edge_isl)
            and np.array_equal(self.up, other.up)
            and np.array_equal(self.plane, other.plane)
            and np.array_equal(self.slot, other.slot)
            and np.allclose(self.positions, other.positions, rtol=0.0, atol=atol)
        )


def _phase(p: WalkerParams, plane, slot):
    n = p.planes * p.sats_per_plane
    return 2 * np.pi * slot / p.sats_per_plane + 2 * np.pi * p.phasing_factor * plane / n


def _positions(p: WalkerParams, plane: np.ndarray, slot: np.ndarray, t: float) -> np.ndarray:
    raan = 2 * np.pi * plane / p.planes
    return _orbit_positions(raan, _phase(p, plane, slot), p.inclination, p.angular_rate, t)


def build_walker_delta(params: WalkerParams, epoch_time: float = 0.0) -> ConstellationGraph:
    P, S = params.planes, params.sats_per_plane
    n = P * S
    ids = np.arange(n)
    plane, slot = ids // S, ids % S

    neighbors = np.full((n, 4), -1, dtype=np.int64)
    edge_index = np.full((n, 4), -1, dtype=np.int64)
    edges, edge_isl = [], []
    for v in range(n):
        p, s = divmod(v, S)
        fwd = p * S + (s + 1) % S
        edges.append((v, fwd))
        edge_isl.append((ISL_FORWARD, ISL_BACKWARD))
        if params.seam_links or p + 1 < P:
            edges.append((v, ((p + 1) % P) * S + s))
            edge_isl.append((ISL_NEXT_PLANE, ISL_PREV_PLANE))
    edges = np.array(edges, dtype=np.int64)
    edge_isl = np.array(edge_isl, dtype=np.int64)
    for e, ((a, b), (ia, ib)) in enumerate(zip(edges, edge_isl)):
        neighbors[a, ia - 1], edge_index[a, ia - 1] = b, e
        neighbors[b, ib - 1], edge_index[b, ib - 1] = a, e

    return ConstellationGraph(
        params=params,
        epoch_time=float(epoch_time),
        positions=_frozen(_positions(params, plane, slot, epoch_time)),
        plane=_frozen(plane),
        slot=_frozen(slot),
        edges=_frozen(edges),
        edge_isl=_frozen(edge_isl),
        up=_frozen(np.ones(len(edges), dtype=bool)),
        neighbors=_frozen(neighbors),
        edge_index=_frozen(edge_index),
    )


def propagate(graph: ConstellationGraph, t: float) -> ConstellationGraph:
    """Advance every satellite ``t`` seconds along its orbit.  Topology is unchanged."""
    if t < 0:
        raise ValueError("t must be non-negative")
    epoch = graph.epoch_time + t
    pos = _positions(graph.params, graph.plane, graph.slot, epoch)
    return replace(graph, epoch_time=epoch, positions=_frozen(pos))


def draw_failures(rng: np.random.Generator, n_edges: int, p: float) -> np.ndarray:
    """Up-state vector with each edge independently Down with probability ``p``."""
    return rng.random(n_edges) >= p


def apply_link_failures(graph: ConstellationGraph, p: float, seed: int) -> ConstellationGraph:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"failure probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    return graph.with_up(draw_failures(rng, graph.n_edges, p))


def with_links_down(graph: ConstellationGraph, pairs) -> ConstellationGraph:
    """Copy of ``graph`` with the ISLs between each ``(a, b)`` pair set Down."""
    up = graph.up.copy()
    for a, b in pairs:
        up[graph.find_edge(a, b)] = False
    return graph.with_up(up)


def reachable(graph: ConstellationGraph, s: int, d: int) -> bool:
    """True iff Up links connect ``s`` to ``d``."""
    n = graph.n_nodes
    if not (0 <= s < n and 0 <= d < n):
        raise IndexError(f"node ids must be in [0, {n})")
    if s == d:
        return True
    adj = graph.up_table
    seen = {s, -1}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v == d:
                return True
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return False


def hop_distances(graph: ConstellationGraph, s: int, limit: int | None = None) -> dict[int, int]:
    """Breadth-first hop counts from ``s`` over Up links, optionally truncated."""
    adj = graph.up_neighbors
    dist = {s: 0}
    frontier = [s]
    k = 0
    while frontier and (limit is None or k < limit):
        k += 1
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = k
                    nxt.append(v)
        frontier = nxt
    return dist


# -- JSON topology dump ------------------------------------------------------


def topology_to_dict(graph: ConstellationGraph) -> dict:
    p = graph.params
    return {
        "params": {
            "planes": p.planes,
            "sats_per_plane": p.sats_per_plane,
            "inclination": p.inclination,
            "phasing_factor": p.phasing_factor,
            "angular_rate": p.angular_rate,
            "seam_links": p.seam_links,
            "epoch_time": graph.epoch_time,
        },
        "nodes": [
            {"id": v, "plane": int(graph.plane[v]), "slot": int(graph.slot[v]),
             "x": float(x), "y": float(y), "z": float(z)}
            for v, (x, y, z) in enumerate(graph.positions)
        ],
        "edges": [
            {"a": a, "b": b, "isl_a": ia, "isl_b": ib, "up": u}
            for a, b, ia, ib, u in graph.edge_list()
        ],
    }


def topology_from_dict(doc: dict) -> ConstellationGraph:
    pd = dict(doc["params"])
    epoch = float(pd.pop("epoch_time", 0.0))
    params = WalkerParams(**pd)
    nodes = sorted(doc["nodes"], key=lambda nd: nd["id"])
    if [nd["id"] for nd in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be dense 0..N-1")
    if len(nodes) != params.n_nodes:
        raise ValueError("node count does not match params")
    n = len(nodes)
    edges = np.array([(e["a"], e["b"]) for e in doc["edges"]], dtype=np.int64).reshape(-1, 2)
    edge_isl = np.array([(e["isl_a"], e["isl_b"]) for e in doc["edges"]], dtype=np.int64).reshape(-1, 2)
    up = np.array([bool(e["up"]) for e in doc["edges"]], dtype=bool)
    neighbors = np.full((n, 4), -1, dtype=np.int64)
    edge_index = np.full((n, 4), -1, dtype=np.int64)
    for e, ((a, b), (ia, ib)) in enumerate(zip(edges, edge_isl)):
        if edge_index[a, ia - 1] >= 0 or edge_index[b, ib - 1] >= 0:
            raise ValueError(f"ISL port reused by edge {a}-{b}")
        neighbors[a, ia - 1], edge_index[a, ia - 1] = b, e
        neighbors[b, ib - 1], edge_index[b, ib - 1] = a, e
    return ConstellationGraph(
        params=params,
        epoch_time=epoch,
        positions=_frozen(np.array([(nd["x"], nd["y"], nd["z"]) for nd in nodes], dtype=float)),
        plane=_frozen(np.array([nd["plane"] for nd in nodes], dtype=np.int64)),
        slot=_frozen(np.array([nd["slot"] for nd in nodes], dtype=np.int64)),
        edges=_frozen(edges),
        edge_isl=_frozen(edge_isl),
        up=_frozen(up),
        neighbors=_frozen(neighbors),
        edge_index=_frozen(edge_index),
    )


def dump_topology(graph: ConstellationGraph, path) -> None:
    Path(path).write_text(json.dumps(topology_to_dict(graph), indent=1))


def load_topology(path) -> ConstellationGraph:
    return topology_from_dict(json.loads(Path(path).read_text()))
