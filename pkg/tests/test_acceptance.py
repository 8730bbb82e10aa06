"""End-to-end acceptance campaign.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  The Monte Carlo campaigns are shared through module
fixtures so the trace checks in criterion 4 cover every packet they routed.

Run alone with ``pytest tests/test_acceptance.py -s``.
"""
import itertools
import math
from collections import deque

import numpy as np
import pytest

from orthoroute.constellation import WalkerParams, apply_link_failures, build_walker_delta, with_links_down
from orthoroute.experiments import ExperimentConfig, format_csv, min_radius_for_loss, run_sweep
from orthoroute.flooding import LocalView, run_flood_convergence
from orthoroute.geometry import NodeAddress, UnitVector, dist_key
from orthoroute.routing import Outcome, check_monotone, route_with_oracle_views
from orthoroute.spf import (
    ForwardingRow,
    ForwardingTable,
    comparator_stages,
    lookup_comparator_tree,
    lookup_linear,
    spf_bounded,
)

pytestmark = pytest.mark.slow

DEFAULT = WalkerParams.degrees(24, 66, 53.0)
MESH_24 = WalkerParams.degrees(24, 24, 53.0)
TREND_P = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35)
RADII = tuple(range(1, 31))
TARGET = 0.01


# independent oracles: plain adjacency lists straight from the edge array

def adjacency(graph):
    adj = {v: [] for v in range(graph.n_nodes)}
    for (a, b), up in zip(graph.edges.tolist(), graph.up.tolist()):
        if up:
            adj[a].append(b)
            adj[b].append(a)
    return adj


def bfs_ball(adj, root, r):
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        if dist[u] == r:
            continue
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def connected(adj, s, d):
    seen, stack = {s}, [s]
    while stack:
        u = stack.pop()
        if u == d:
            return True
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def random_walker(rng, lo=3, hi=12):
    return WalkerParams.degrees(int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)),
                                float(rng.uniform(30, 90)), phasing_factor=int(rng.integers(0, 3)))


# shared campaigns

@pytest.fixture(scope="module")
def anchor_row():
    config = ExperimentConfig(walker=DEFAULT, p_values=(0.25,), r_values=(10,), trials_per_cell=10_000,
                              master_seed=101, check_traces=True)
    return run_sweep(config)[0]


@pytest.fixture(scope="module")
def trend_rows():
    # paired coupling: every cell sees the same topologies and pairs
    config = ExperimentConfig(walker=DEFAULT, p_values=TREND_P, r_values=RADII, trials_per_cell=500,
                              master_seed=202, coupling="paired", check_traces=True)
    return run_sweep(config)


@pytest.fixture(scope="module")
def circumnavigation():
    base = build_walker_delta(WalkerParams.degrees(6, 6, 53.0))
    rng = np.random.default_rng(303)
    stats = {"routed": 0, "delivered": 0, "violations": 0, "aborted": 0, "failures": []}
    for a, b in base.edges.tolist():
        g = with_links_down(base, [(a, b)])
        for _ in range(100):
            s, d = (int(v) for v in rng.choice(g.n_nodes, size=2, replace=False))
            trace = route_with_oracle_views(g, s, d, 2)
            stats["routed"] += 1
            stats["delivered"] += trace.delivered
            stats["violations"] += bool(check_monotone(trace))
            stats["aborted"] += trace.outcome is Outcome.ABORTED_HOP_LIMIT
            if not trace.delivered:
                stats["failures"].append(((a, b), s, d))
    return stats


def min_radii(rows, ps):
    return {p: min_radius_for_loss(rows, p, TARGET) for p in ps}


# criteria

def test_criterion_1_radius_10_anchor(anchor_row, report):
    loss = anchor_row.loss_rate
    detail = (f"24x66 p=0.25 r=10 trials={anchor_row.trials} loss={loss:.4f} "
              f"delivered={anchor_row.delivered} dropped={anchor_row.dropped} "
              f"discarded={anchor_row.discarded_disconnected}")
    if 0.01 < loss < 0.02:
        detail += "; FLAG above 0.01, inside the 0.02 bound"
    report("criterion 1 radius-10 anchor", loss < 0.02, detail)
    assert anchor_row.trials >= 10_000
    assert loss < 0.02


def test_criterion_2_radius_growth(trend_rows, report):
    radii = min_radii(trend_rows, TREND_P)
    shown = " ".join(f"{p:.2f}:{radii[p]}" for p in TREND_P)
    ok = all(v is not None for v in radii.values())
    if ok:
        seq = [radii[p] for p in TREND_P[:-1]]  # 0.05 .. 0.30
        nondecreasing = all(a <= b for a, b in zip(seq, seq[1:]))
        below = [radii[q] - radii[p] for p, q in zip(TREND_P, TREND_P[1:]) if q <= 0.25 + 1e-9]
        jump = radii[0.35] - radii[0.30]
        ok = nondecreasing and jump > sum(below) / len(below)
        shown += f"; jump 0.30->0.35={jump} mean increment below 0.25={sum(below) / len(below):.2f}"
    else:
        losses = {p: min(row.loss_rate for row in trend_rows if row.p == p) for p in TREND_P}
        shown += "; best loss over r<=30: " + " ".join(f"{p:.2f}:{v:.3f}" for p, v in losses.items())
    report("criterion 2 radius growth trend", ok, f"min r at 1% loss by p: {shown}")
    assert ok


def test_criterion_3_single_failure_circumnavigation(circumnavigation, report):
    st = circumnavigation
    ok = st["delivered"] == st["routed"]
    detail = f"6x6 r=2 delivered {st['delivered']}/{st['routed']}"
    if not ok:
        (a, b), s, d = st["failures"][0]
        detail += f"; first miss: link {a}-{b} down, {s}->{d}"
    report("criterion 3 single-failure circumnavigation", ok, detail)
    assert st["routed"] == 72 * 100
    assert ok


def test_criterion_4_gateway_sequence(anchor_row, trend_rows, circumnavigation, report):
    rows = [anchor_row, *trend_rows]
    traces = sum(row.delivered + row.dropped for row in rows) + circumnavigation["routed"]
    violations = sum(row.monotone_violations for row in rows) + circumnavigation["violations"]
    aborted = sum(row.aborted for row in rows) + circumnavigation["aborted"]
    ok = traces >= 100_000 and violations == 0 and aborted == 0
    report("criterion 4 gateway sequence", ok,
           f"traces={traces} monotone violations={violations} hop-limit aborts={aborted}")
    assert traces >= 100_000
    assert violations == 0 and aborted == 0


def test_criterion_5_flooding_matches_bfs_ball(report):
    base = build_walker_delta(MESH_24)
    rng = np.random.default_rng(505)
    checked, mismatches = 0, 0
    for k in range(10):
        g = apply_link_failures(base, float(rng.uniform(0.05, 0.35)), 5000 + k)
        adj = adjacency(g)
        for r in (1, 2, 3, 5):
            dbs = run_flood_convergence(g, r)
            for v in range(g.n_nodes):
                checked += 1
                mismatches += dbs[v].origins() != set(bfs_ball(adj, v, r))
    ok = mismatches == 0
    report("criterion 5 flooding oracle", ok, f"{checked} databases compared, {mismatches} mismatched")
    assert ok


def random_table(rng, k):
    if rng.random() < 0.3:
        pool = rng.normal(size=(4, 3))  # few distinct positions so metric ties occur
        pts = pool[rng.integers(0, 4, size=k)]
    else:
        pts = rng.normal(size=(k, 3))
    ids = rng.choice(1 << 20, size=k, replace=False)
    return ForwardingTable(tuple(
        ForwardingRow(NodeAddress(int(i), UnitVector(*p)), int(rng.integers(1, 5))) for i, p in zip(ids, pts)
    ))


def test_criterion_6_comparator_tree(report):
    rng = np.random.default_rng(606)
    compared, wrong, bad_stages = 0, 0, 0
    pool = [NodeAddress(i, UnitVector(*rng.normal(size=3))) for i in range(6)]
    pool.append(NodeAddress(6, pool[0].position))  # coincident position, distinct id
    # exhaustive over small tables: every ordered subset of the pool against every destination
    for k in range(1, 5):
        for rows in itertools.permutations(pool, k):
            table = ForwardingTable(tuple(ForwardingRow(a, n % 4 + 1) for n, a in enumerate(rows)))
            for dest in pool:
                compared += 1
                row, stages = lookup_comparator_tree(table, dest)
                wrong += row != lookup_linear(table, dest)
                bad_stages += stages != math.ceil(math.log2(k)) if k > 1 else stages != 0
    for k in range(1, 17):
        for _ in range(40):
            table = random_table(rng, k)
            dest = NodeAddress(int(rng.integers(0, 1 << 20)), UnitVector(*rng.normal(size=3)))
            compared += 1
            row, stages = lookup_comparator_tree(table, dest)
            wrong += row != lookup_linear(table, dest)
            bad_stages += stages != comparator_stages(k)
    for _ in range(10_000):
        k = int(rng.integers(1, 1025))
        table = random_table(rng, k)
        dest = table.rows[int(rng.integers(0, k))].address if rng.random() < 0.2 else \
            NodeAddress(int(rng.integers(0, 1 << 20)), UnitVector(*rng.normal(size=3)))
        compared += 1
        row, stages = lookup_comparator_tree(table, dest)
        wrong += row != lookup_linear(table, dest)
        bad_stages += stages != math.ceil(math.log2(k)) if k > 1 else stages != 0
    k1000 = comparator_stages(1000)
    ok = wrong == 0 and bad_stages == 0 and k1000 == 10
    report("criterion 6 comparator tree", ok,
           f"{compared} lookups, {wrong} differ from linear scan, {bad_stages} stage-count errors, K=1000 -> {k1000}")
    assert ok


def test_criterion_7_spf_matches_truncated_bfs(report):
    rng = np.random.default_rng(707)
    wrong = 0
    for _ in range(1000):
        g = apply_link_failures(build_walker_delta(random_walker(rng)), float(rng.uniform(0, 0.5)),
                                int(rng.integers(0, 2**32)))
        view = LocalView(0, {v: g.address(v).position for v in range(g.n_nodes)},
                         {v: [(int(g.neighbors[v, k]), k + 1) for k in range(4) if g.link_state(v, k + 1)[1]]
                          for v in range(g.n_nodes)})
        root, r = int(rng.integers(0, g.n_nodes)), int(rng.integers(1, 12))
        tree = spf_bounded(view, root, r)
        adj = adjacency(g)
        ball = bfs_ball(adj, root, r)
        good = tree.depth == ball and tree.root == root and root not in tree.parent
        for child, (par, isl) in tree.parent.items():
            # lowest-id parent on the previous layer, then the lowest ISL toward the child
            best_par = min(u for u in adj[child] if ball.get(u) == ball[child] - 1)
            best_isl = min(k + 1 for k in range(4)
                           if int(g.neighbors[par, k]) == child and g.link_state(par, k + 1)[1])
            good &= par == best_par and isl == best_isl
        wrong += not good
    ok = wrong == 0
    report("criterion 7 SPF oracle", ok, f"1000 instances, {wrong} differ from truncated BFS")
    assert ok


def test_criterion_8_full_radius_completeness(report):
    rng = np.random.default_rng(808)
    wrong, delivered = 0, 0
    for _ in range(1000):
        g = apply_link_failures(build_walker_delta(random_walker(rng, 3, 10)), float(rng.uniform(0, 0.6)),
                                int(rng.integers(0, 2**32)))
        s, d = (int(v) for v in rng.choice(g.n_nodes, size=2, replace=False))
        trace = route_with_oracle_views(g, s, d, g.n_nodes)
        delivered += trace.delivered
        wrong += trace.delivered != connected(adjacency(g), s, d)
    ok = wrong == 0
    report("criterion 8 full-radius completeness", ok,
           f"1000 instances, {delivered} delivered, {wrong} disagree with reachability")
    assert ok


def test_criterion_9_determinism(report):
    config = ExperimentConfig(walker=DEFAULT, p_values=(0.1, 0.25), r_values=(1, 5, 10), trials_per_cell=200,
                              master_seed=909)
    first = format_csv(run_sweep(config, threads=1)).encode()
    second = format_csv(run_sweep(config, threads=1)).encode()
    eight = format_csv(run_sweep(config, threads=8)).encode()
    ok = first == second == eight
    report("criterion 9 determinism", ok, f"{len(first)} bytes; repeat equal={first == second}, "
                                         f"threads 8 equal={first == eight}")
    assert ok


# invariants checked on the same footing

def test_invariant_no_loss_without_failures(report):
    config = ExperimentConfig(walker=DEFAULT, p_values=(0.0,), r_values=tuple(range(2, 31)), trials_per_cell=300,
                              master_seed=1001, coupling="paired")
    rows = run_sweep(config)
    lossy = [row for row in rows if row.dropped]
    ok = not lossy
    detail = "24x66 p=0 r=2..30, 300 pairs each"
    if lossy:
        detail += "; loss by r: " + " ".join(f"{row.r}:{row.loss_rate:.3f}" for row in rows if row.r in (2, 5, 10, 20, 30))
    report("invariant zero loss at p=0, r>=2", ok, detail)
    assert ok


def test_invariant_size_independence(trend_rows, report):
    config = ExperimentConfig(walker=MESH_24, p_values=(0.25,), r_values=RADII, trials_per_cell=500,
                              master_seed=202, coupling="paired")
    small = min_radius_for_loss(run_sweep(config), 0.25, TARGET)
    large = min_radius_for_loss(trend_rows, 0.25, TARGET)
    ok = small is not None and large is not None and abs(small - large) <= 2
    report("invariant size independence", ok, f"min r at p=0.25, 1% loss: 24x24 -> {small}, 24x66 -> {large}")
    assert ok


def test_empirical_greedy_complete_without_failures(report):
    # open question rather than an invariant: does OR(1) deliver every pair on an intact mesh?
    g = build_walker_delta(WalkerParams.degrees(6, 6, 53.0))
    pairs = [(s, d) for s in range(g.n_nodes) for d in range(g.n_nodes) if s != d]
    missed = [(s, d) for s, d in pairs if not route_with_oracle_views(g, s, d, 1).delivered]
    ok = not missed
    report("empirical check OR(1) on intact 6x6", ok, f"{len(pairs) - len(missed)}/{len(pairs)} pairs delivered")
    assert ok
