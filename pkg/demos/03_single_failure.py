"""One failed link strands greedy forwarding; one extra hop of visibility fixes it.

We find a node on the failure-free greedy path whose only improving
neighbour is the next hop, cut that link, and route again with r=1 and r=2.
"""
from orthoroute import (WalkerParams, build_walker_delta, greedy_bottleneck, route_with_oracle_views,
                        with_links_down)

graph = build_walker_delta(WalkerParams.degrees(24, 66, 53.0))
s, d = 0, 130
c, n = greedy_bottleneck(graph, s, d)
print(f"greedy path {s} -> {d} depends on link {c}-{n}; cutting it")
cut = with_links_down(graph, [(c, n)])

for r in (1, 2):
    trace = route_with_oracle_views(cut, s, d, r)
    print(f"\nradius {r}:")
    print("\n".join("  " + line for line in trace.lines()))
