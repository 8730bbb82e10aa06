"""Command-line entry point: ``orthoroute <subcommand>`` or ``python -m orthoroute``.

Exit codes: 0 success (or Delivered), 2 routed but dropped, 1 usage/config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import constellation as cons
from .experiments import (
    DEFAULT_P_VALUES,
    DEFAULT_R_VALUES,
    ExperimentConfig,
    min_radius_summary,
    read_csv,
    run_sweep,
    write_csv,
)
from .flooding import FloodSimulator
from .routing import Outcome, route_packet, route_with_oracle_views


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _radius_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _load_failed_topology(args):
    graph = cons.load_topology(args.topology)
    if args.fail_prob:
        if args.seed is None:
            raise UsageError("--fail-prob needs an explicit --seed")
        graph = cons.apply_link_failures(graph, args.fail_prob, args.seed)
    if getattr(args, "fail_link", None):
        try:
            graph = cons.with_links_down(graph, [tuple(pair) for pair in args.fail_link])
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    return graph


def cmd_gen_topology(args) -> int:
    try:
        params = cons.WalkerParams.degrees(
            args.planes, args.per_plane, args.inclination_deg,
            phasing_factor=args.phasing, seam_links=not args.no_seam,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    graph = cons.build_walker_delta(params, args.epoch)
    cons.dump_topology(graph, args.out)
    print(f"{graph.n_nodes} nodes, {graph.n_edges} edges")
    return 0


def cmd_route(args) -> int:
    graph = _load_failed_topology(args)
    n = graph.n_nodes
    if not (0 <= args.src < n and 0 <= args.dst < n):
        raise UsageError(f"--src/--dst must be node ids in [0, {n})")
    if args.views == "flood":
        from .flooding import views_from_flooding
        trace = route_packet(graph, views_from_flooding(graph, args.radius), args.src, args.dst,
                             args.radius, args.hop_limit)
    else:
        trace = route_with_oracle_views(graph, args.src, args.dst, args.radius, args.hop_limit)
    print("\n".join(trace.lines()))
    return 0 if trace.outcome is Outcome.DELIVERED else 2


def cmd_flood_sim(args) -> int:
    graph = _load_failed_topology(args)
    trace = [] if args.trace else None
    sim = FloodSimulator(graph, args.radius, args.hop_latency, trace)
    for v in range(graph.n_nodes):
        sim.originate(v, 0.0)
    events = sim.run()
    if args.aging:
        sim.age_out_all(sim.now, args.aging)
    mismatched = []
    for v in range(graph.n_nodes):
        ball = set(cons.hop_distances(graph, v, args.radius))
        if sim.dbs[v].origins() != ball:
            mismatched.append(v)
    if trace is not None:
        Path(args.trace).write_text("\n".join(trace) + ("\n" if trace else ""))
    sizes = [len(db.entries) for db in sim.dbs.values()]
    print(f"events={events} messages={sim.messages_sent} converged_at={sim.last_delivery:.6f}s")
    print(f"lsdb size min={min(sizes)} mean={sum(sizes) / len(sizes):.1f} max={max(sizes)}")
    print(f"oracle mismatches={len(mismatched)}")
    return 0 if not mismatched else 1


def _sweep_config(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
    walker = dict(doc.get("walker", {}))
    for flag, key in (("planes", "planes"), ("per_plane", "sats_per_plane"), ("phasing", "phasing_factor")):
        if getattr(args, flag) is not None:
            walker[key] = getattr(args, flag)
    if args.inclination_deg is not None:
        walker.pop("inclination", None)
        walker["inclination_deg"] = args.inclination_deg
    walker.setdefault("planes", 24)
    walker.setdefault("sats_per_plane", 66)
    if "inclination" not in walker:
        walker.setdefault("inclination_deg", 53.0)
    doc["walker"] = walker
    if args.p is not None:
        doc["p_values"] = args.p
    if args.r is not None:
        doc["r_values"] = args.r
    if args.trials is not None:
        doc["trials_per_cell"] = args.trials
    if args.targets is not None:
        doc["loss_targets"] = args.targets
    if args.coupling is not None:
        doc["coupling"] = args.coupling
    if args.seed is not None:
        doc["master_seed"] = args.seed
    if "master_seed" not in doc:
        raise UsageError("sweep needs an explicit --seed (or master_seed in the config)")
    doc.setdefault("p_values", list(DEFAULT_P_VALUES))
    doc.setdefault("r_values", list(DEFAULT_R_VALUES))
    try:
        return ExperimentConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad sweep config: {exc}") from None


def _print_summary(rows, targets) -> None:
    for item in min_radius_summary(rows, targets):
        shown = "none" if item["min_r"] is None else item["min_r"]
        print(f"p={item['p']:.3f} target={item['target']:g} min_r={shown}")


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    rows = run_sweep(config, threads=args.threads)
    nbytes = write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows ({nbytes} bytes) to {args.out}")
    _print_summary(rows, config.loss_targets)
    if args.summary_json:
        Path(args.summary_json).write_text(json.dumps(min_radius_summary(rows, config.loss_targets), indent=1))
    return 0


def cmd_min_radius(args) -> int:
    rows = read_csv(args.csv)
    _print_summary(rows, args.target)
    if args.json:
        Path(args.json).write_text(json.dumps(min_radius_summary(rows, args.target), indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="orthoroute", description="OR(r) routing for satellite constellations")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-topology", help="write a Walker Delta topology as JSON")
    g.add_argument("--planes", type=int, required=True)
    g.add_argument("--per-plane", type=int, required=True)
    g.add_argument("--inclination-deg", type=float, default=53.0)
    g.add_argument("--phasing", type=int, default=0)
    g.add_argument("--no-seam", action="store_true", help="drop the last-plane to first-plane links")
    g.add_argument("--epoch", type=float, default=0.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_topology)

    def failure_flags(p):
        p.add_argument("--topology", required=True)
        p.add_argument("--fail-prob", type=float, default=0.0)
        p.add_argument("--seed", type=int)
        p.add_argument("--fail-link", type=int, nargs=2, action="append", metavar=("A", "B"),
                       help="force the ISL between A and B down (repeatable)")
        p.add_argument("--radius", type=int, required=True)

    r = sub.add_parser("route", help="trace one packet")
    failure_flags(r)
    r.add_argument("--src", type=int, required=True)
    r.add_argument("--dst", type=int, required=True)
    r.add_argument("--hop-limit", type=int)
    r.add_argument("--views", choices=("oracle", "flood"), default="oracle")
    r.set_defaults(func=cmd_route)

    f = sub.add_parser("flood-sim", help="flood LSUs and check every LSDB against the r-hop ball")
    failure_flags(f)
    f.add_argument("--trace", help="write the per-event flood log here")
    f.add_argument("--hop-latency", type=float, default=0.005)
    f.add_argument("--aging", type=float, help="age out entries older than this after convergence")
    f.set_defaults(func=cmd_flood_sim)

    s = sub.add_parser("sweep", help="Monte Carlo loss sweep over (p, r)")
    s.add_argument("--config", help="JSON experiment config; flags override its fields")
    s.add_argument("--planes", type=int)
    s.add_argument("--per-plane", type=int)
    s.add_argument("--inclination-deg", type=float)
    s.add_argument("--phasing", type=int)
    s.add_argument("--p", type=float, nargs="+")
    s.add_argument("--r", type=_radius_list, help="radii, e.g. 1-30 or 1,2,5,10")
    s.add_argument("--trials", type=int)
    s.add_argument("--targets", type=float, nargs="+")
    s.add_argument("--coupling", choices=("independent", "paired"))
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--summary-json")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("min-radius", help="smallest radius meeting each loss target, from a sweep CSV")
    m.add_argument("--csv", required=True)
    m.add_argument("--target", type=float, nargs="+", default=[0.01])
    m.add_argument("--json")
    m.set_defaults(func=cmd_min_radius)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"orthoroute: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"orthoroute: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
