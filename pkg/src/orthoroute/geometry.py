"""Unit-sphere positions, satellite addresses and the distance orderings used for forwarding.

Two distance measures live here.  ``angle`` is the true great-circle angle
between two positions.  ``mu_hat`` is the cheap surrogate ``-A.B`` which
orders candidates identically because arccos is monotone decreasing on
[-1, 1].  Routing decisions never need the angle itself, only the order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class UnitVector:
    """A point on the unit sphere.  Inputs are normalized on construction."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        x, y, z = float(self.x), float(self.y), float(self.z)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise ValueError(f"non-finite component in ({x}, {y}, {z})")
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        if abs(norm - 1.0) > UNIT_TOL:
            x, y, z = x / norm, y / norm, z / norm
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_array(cls, v) -> "UnitVector":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "UnitVector") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z


@dataclass(frozen=True)
class NodeAddress:
    """Routable identity of a satellite: ``[ID | <x, y, z>]``."""

    id: int
    position: UnitVector

    def __post_init__(self):
        if not 0 <= self.id < 2**64:
            raise ValueError(f"id {self.id} outside the unsigned 64-bit range")


class DistKey(NamedTuple):
    """Lexicographic preference key; smaller is a better candidate.

    Ordered by (mu_hat to destination, |candidate id - dest id|, candidate id),
    so two keys are equal only when they describe the same candidate.
    """

    primary: float
    id_gap: int
    candidate_id: int


def angle(a: UnitVector, b: UnitVector) -> float:
    """Great-circle angle between two unit vectors, in radians."""
    d = a.x * b.x + a.y * b.y + a.z * b.z
    return math.acos(min(1.0, max(-1.0, d)))


def mu_hat(a: UnitVector, b: UnitVector) -> float:
    # the evaluation order here is shared with mu_hat_array so both agree bit for bit
    return -(a.x * b.x + a.y * b.y + a.z * b.z)


def mu_hat_array(positions: np.ndarray, dest) -> np.ndarray:
    """Vectorized ``mu_hat`` of every row of an ``(n, 3)`` array against ``dest``."""
    if isinstance(dest, UnitVector):
        dx, dy, dz = dest.x, dest.y, dest.z
    else:
        dx, dy, dz = (float(c) for c in dest)
    return -(positions[:, 0] * dx + positions[:, 1] * dy + positions[:, 2] * dz)


def dist_key(candidate: NodeAddress, dest: NodeAddress) -> DistKey:
    # -|D|^2 can round above the dot product of D with a near-coincident
    # satellite; pin the destination's own key at the exact minimum
    if candidate.id == dest.id:
        primary = -1.0
    else:
        primary = min(1.0, max(-1.0, mu_hat(candidate.position, dest.position)))
    return DistKey(primary, abs(candidate.id - dest.id), candidate.id)


def preference_rank(positions: np.ndarray, dest_id: int) -> np.ndarray:
    """Rank of every node (ids ``0..n-1``) in DistKey order toward ``dest_id``.

    ``rank[v] < rank[u]`` exactly when ``v`` is the preferred candidate.  The
    rank array lets a router compare candidates with plain integer compares.
    """
    n = positions.shape[0]
    ids = np.arange(n)
    primary = np.clip(mu_hat_array(positions, positions[dest_id]), -1.0, 1.0)
    primary[dest_id] = -1.0
    order = np.lexsort((ids, np.abs(ids - dest_id), primary))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = ids
    return rank
