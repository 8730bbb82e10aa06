"""Loss rate against routing radius for a few failure probabilities.

Paired seeds give every radius the same failed topologies and packet pairs,
so the curves differ only through the radius.  Pure greedy forwarding
already loses packets at p=0 on this mesh: the ascending and descending
halves of the shell interleave, so a node's closest neighbour toward the
destination is often not on a path that gets any closer.
"""
from orthoroute import ExperimentConfig, WalkerParams, min_radius_for_loss, run_sweep

config = ExperimentConfig(
    walker=WalkerParams.degrees(24, 66, 53.0),
    p_values=(0.0, 0.1, 0.25),
    r_values=(1, 2, 5, 10, 20, 30),
    trials_per_cell=300,
    master_seed=42,
    coupling="paired",
)
rows = run_sweep(config)

print("loss rate (dropped / routed)")
print("   r " + "".join(f"  p={p:<5}" for p in config.p_values))
for r in config.r_values:
    cells = {row.p: row for row in rows if row.r == r}
    print(f"{r:>4} " + "".join(f"  {cells[p].loss_rate:7.3f}" for p in config.p_values))

for p in config.p_values:
    print(f"smallest radius with loss <= 10% at p={p}: {min_radius_for_loss(rows, p, 0.10)}")
