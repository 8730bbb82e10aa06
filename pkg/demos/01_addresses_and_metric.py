"""Addresses on the unit sphere and the forwarding metric.

A satellite is addressed by an id plus its position on the unit sphere.
Forwarding never needs the great-circle angle itself: ordering candidates by
-A.B gives the same answer with three multiplies and no arccos.
"""
import numpy as np

from orthoroute import NodeAddress, UnitVector, angle, dist_key, mu_hat

rng = np.random.default_rng(7)
dest = NodeAddress(500, UnitVector(*rng.normal(size=3)))
candidates = [NodeAddress(i, UnitVector(*rng.normal(size=3))) for i in range(8)]

print(f"destination {dest.id} at ({dest.position.x:+.3f}, {dest.position.y:+.3f}, {dest.position.z:+.3f})")
print(f"{'id':>4} {'angle (deg)':>12} {'mu_hat':>9}")
for c in sorted(candidates, key=lambda c: dist_key(c, dest)):
    print(f"{c.id:>4} {np.degrees(angle(c.position, dest.position)):>12.3f} {mu_hat(c.position, dest.position):>9.4f}")

by_angle = min(candidates, key=lambda c: angle(c.position, dest.position))
by_key = min(candidates, key=lambda c: dist_key(c, dest))
print(f"\nclosest by angle: {by_angle.id}, closest by key: {by_key.id}")

# two satellites at the same spot: the id gap to the destination decides
twin_a = NodeAddress(498, candidates[0].position)
twin_b = NodeAddress(503, candidates[0].position)
print("coincident pair prefers", min((twin_a, twin_b), key=lambda c: dist_key(c, dest)).id, "(smaller id gap)")
