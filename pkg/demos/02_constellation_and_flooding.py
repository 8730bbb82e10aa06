"""Build a Walker Delta mesh, fail some links, and flood link state r hops out.

After flooding every node knows exactly the satellites within r hops over
working links, and nothing farther away.
"""
from orthoroute import WalkerParams, apply_link_failures, build_walker_delta, hop_distances
from orthoroute.flooding import FloodSimulator

params = WalkerParams.degrees(12, 12, 53.0)
graph = build_walker_delta(params)
print(f"{graph.n_nodes} satellites, {graph.n_edges} links, orbital period {params.period:.0f} s")

failed = apply_link_failures(graph, p=0.15, seed=3)
print(f"{int((~failed.up).sum())} links down after failures at p=0.15")

for r in (1, 2, 4):
    sim = FloodSimulator(failed, r)
    for v in range(failed.n_nodes):
        sim.originate(v, 0.0)
    sim.run()
    sizes = [len(db.entries) for db in sim.dbs.values()]
    exact = all(sim.dbs[v].origins() == set(hop_distances(failed, v, r)) for v in range(failed.n_nodes))
    print(f"r={r}: {sim.messages_sent:6d} messages, converged at {sim.last_delivery * 1000:.0f} ms, "
          f"database size {min(sizes)}..{max(sizes)}, equals r-hop ball: {exact}")
