"""Depth-bounded SPF over a local view, forwarding tables and the argmin lookup.

Link costs are all 1, so the SPF is a layered breadth-first search.  Among
equal-cost parents the lowest node id wins, then the lowest ISL index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .constellation import OrbitalState
from .flooding import LocalView
from .geometry import DistKey, NodeAddress, UnitVector, dist_key

# beats nothing: mu_hat never exceeds 1
SENTINEL_KEY = DistKey(2.0, 2**64, 2**64)


@dataclass(frozen=True)
class SpfTree:
    root: int
    parent: dict[int, tuple[int, int]]  # child -> (parent, isl index at parent)
    depth: dict[int, int]

    @property
    def nodes(self) -> list[int]:
        return list(self.depth)

    def path(self, v: int) -> list[int]:
        """Root-to-``v`` node sequence along the tree."""
        out = [v]
        while v != self.root:
            v = self.parent[v][0]
            out.append(v)
        return out[::-1]

    def first_hop(self, v: int) -> tuple[int, int]:
        """``(node, isl at root)`` of the first step from the root toward ``v``."""
        if v == self.root:
            raise ValueError("the root has no first hop to itself")
        while self.parent[v][0] != self.root:
            v = self.parent[v][0]
        return v, self.parent[v][1]


def spf_bounded(view: LocalView, root: int, r: int) -> SpfTree:
    if root not in view.positions:
        raise KeyError(f"root {root} not in view")
    if r < 1:
        raise ValueError("radius must be at least 1")
    parent: dict[int, tuple[int, int]] = {}
    depth = {root: 0}
    frontier = [root]
    for k in range(1, r + 1):
        nxt = []
        # frontier is sorted, so the first discoverer is the lowest-id parent
        for u in frontier:
            for v, isl in view.adjacency.get(u, ()):
                if v not in depth:
                    depth[v] = k
                    parent[v] = (u, isl)
                    nxt.append(v)
        if not nxt:
            break
        nxt.sort()
        frontier = nxt
    return SpfTree(root, parent, depth)


class ForwardingRow(NamedTuple):
    address: NodeAddress
    isl: int


@dataclass(frozen=True)
class ForwardingTable:
    rows: tuple[ForwardingRow, ...]

    @property
    def K(self) -> int:
        return len(self.rows)

    def to_json(self) -> list[dict]:
        return [
            {"id": row.address.id, "x": row.address.position.x, "y": row.address.position.y,
             "z": row.address.position.z, "isl": row.isl}
            for row in self.rows
        ]


def build_forwarding_table(tree: SpfTree, addresses: Mapping[int, NodeAddress]) -> ForwardingTable:
    rows = []
    for v in sorted(tree.depth):
        if v == tree.root:
            continue
        _, isl = tree.first_hop(v)
        rows.append(ForwardingRow(addresses[v], isl))
    return ForwardingTable(tuple(rows))


def view_addresses(view: LocalView) -> dict[int, NodeAddress]:
    return {v: NodeAddress(v, pos) for v, pos in view.positions.items()}


def lookup_linear(table: ForwardingTable, dest: NodeAddress) -> ForwardingRow | None:
    best, best_key = None, None
    for row in table.rows:
        key = dist_key(row.address, dest)
        if best_key is None or key < best_key:
            best, best_key = row, key
    return best


def lookup_comparator_tree(table: ForwardingTable, dest: NodeAddress) -> tuple[ForwardingRow | None, int]:
    """Pairwise min-reduction, one comparator level per stage.

    The leaf level evaluates every row's metric in parallel and is not counted.
    Rows are padded with never-winning sentinels up to a power of two.
    """
    k = table.K
    if k == 0:
        return None, 0
    level = [(dist_key(row.address, dest), row) for row in table.rows]
    width = 1 << (k - 1).bit_length()
    level.extend((SENTINEL_KEY, None) for _ in range(width - k))
    stages = 0
    while len(level) > 1:
        level = [a if a[0] <= b[0] else b for a, b in zip(level[::2], level[1::2])]
        stages += 1
    return level[0][1], stages


def comparator_stages(k: int) -> int:
    return math.ceil(math.log2(k)) if k >= 2 else 0


def _rotate(v: np.ndarray, axis: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return v * c + np.cross(axis, v) * s + axis * float(axis @ v) * (1.0 - c)


def refresh_positions(table: ForwardingTable, states: Mapping[int, OrbitalState], elapsed: float) -> ForwardingTable:
    """Advance every row's position ``elapsed`` seconds along its orbit.

    Works incrementally from the stored position: a rotation about the orbit
    normal by ``angular_rate * elapsed``.
    """
    if elapsed == 0:
        return table
    rows = []
    for row in table.rows:
        st = states[row.address.id]
        moved = _rotate(row.address.position.as_array(), st.orbit_normal(), st.angular_rate * elapsed)
        rows.append(ForwardingRow(NodeAddress(row.address.id, UnitVector.from_array(moved)), row.isl))
    return ForwardingTable(tuple(rows))
